"""Analytic signed-distance surfaces and their nodal interpolants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import BackgroundMesh

# |value| below PERTURB * h is moved to +PERTURB * h so no node sits on the surface.
PERTURB = 1e-12


class ProjectionError(ValueError):
    """Closest-point projection requested at the center of the surface."""


@dataclass(frozen=True)
class AnalyticSurface:
    """Circle (2D) or sphere (3D) given by center and radius."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) not in (2, 3):
            raise ValueError("center must have 2 or 3 coordinates")

    @property
    def kind(self) -> str:
        return "circle" if self.dim == 2 else "sphere"

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def area(self) -> float:
        """Length of the circle or area of the sphere."""
        if self.dim == 2:
            return 2 * np.pi * self.radius
        return 4 * np.pi * self.radius**2

    def translated(self, shift) -> "AnalyticSurface":
        return AnalyticSurface(tuple(np.add(self.center, shift)), self.radius)


def circle(center=(0.0, 0.0), radius=1.0) -> AnalyticSurface:
    return AnalyticSurface(tuple(center), radius)


def sphere(center=(0.5, 0.5, 0.5), radius=0.5) -> AnalyticSurface:
    return AnalyticSurface(tuple(center), radius)


def signed_distance(surface: AnalyticSurface, x) -> np.ndarray:
    """``|x - c| - r``; works on a single point or an ``(..., dim)`` array."""
    x = np.asarray(x, dtype=float)
    return np.linalg.norm(x - np.asarray(surface.center), axis=-1) - surface.radius


def exact_normal(surface: AnalyticSurface, x) -> np.ndarray:
    """Gradient of the signed distance (outward unit normal of nearest point)."""
    d = np.asarray(x, dtype=float) - np.asarray(surface.center)
    r = np.linalg.norm(d, axis=-1, keepdims=True)
    if np.any(r < 1e-12):
        raise ProjectionError("projection undefined at the surface center")
    return d / r


def closest_point(surface: AnalyticSurface, x) -> np.ndarray:
    c = np.asarray(surface.center)
    return c + surface.radius * exact_normal(surface, x)


def extend_to_neighborhood(surface: AnalyticSurface, g, x):
    """Evaluate ``g`` at the closest point of ``x``: constant along normals."""
    return g(closest_point(surface, x))


@dataclass(frozen=True, eq=False)
class LevelSetField:
    surface: AnalyticSurface
    mesh: BackgroundMesh
    nodal_values: np.ndarray

    def cell_values(self) -> np.ndarray:
        return self.nodal_values[self.mesh.cells]


def interpolate_nodal(surface: AnalyticSurface, mesh: BackgroundMesh) -> LevelSetField:
    if surface.dim != mesh.dim:
        raise ValueError(f"{surface.kind} in {surface.dim}D on a {mesh.dim}D mesh")
    values = signed_distance(surface, mesh.nodes)
    eps = PERTURB * mesh.h
    values[np.abs(values) < eps] = eps
    values.setflags(write=False)
    return LevelSetField(surface, mesh, values)
