import functools

import pytest

from cutfem_lb import problems
from cutfem_lb.experiments import background_mesh, discretize
from cutfem_lb.levelset import circle


@functools.lru_cache(maxsize=None)
def sphere_disc(level: int):
    return discretize(problems.SPHERE, background_mesh(3, level))


@functools.lru_cache(maxsize=None)
def circle_disc(level: int = 32, shift: float = 0.0):
    return discretize(circle((0.5 - shift, 0.5), 0.3), background_mesh(2, level))


@pytest.fixture
def sphere8():
    return sphere_disc(8)


@pytest.fixture
def circle32():
    return circle_disc(32)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
