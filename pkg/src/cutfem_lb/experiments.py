"""Drivers for the convergence, conditioning and translated-circle studies."""
from __future__ import annotations

import contextlib
import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from . import problems
from .analysis import (
    LevelRecord, energy_error, face_error, l2_error, rate,
)
from .assembly import (
    DofMap, assemble_load, assemble_stabilization, assemble_stiffness,
    build_system, diagonal_scaling, mean_constraint,
)
from .cutgeom import CutSurface, cut_surface, geometry_report
from .levelset import AnalyticSurface, LevelSetField, interpolate_nodal
from .linalg import SingularSystemError, condition_number, eigenvalues_sym, solve
from .mesh import BackgroundMesh, build_background_mesh, padded_unit_box

log = logging.getLogger(__name__)

CONVERGE_COLUMNS = ["tau0", "level", "N", "h", "e_h", "R", "energy_err", "face_err",
                    "max_rho", "max_angle", "wall_ms", "status", "seed"]
CONDITION_COLUMNS = ["tau0", "precond", "level", "N", "kappa", "R", "n_neg", "n_zero",
                     "status", "seed"]
SWEEP_COLUMNS = ["delta", "tau0", "N", "kappa", "n_zero", "status", "seed"]

OK, SINGULAR, EMPTY, FAILED = "ok", "singular", "empty_cut", "solver_failed"


@dataclass
class ExperimentConfig:
    experiment: str = "converge"
    dim: int = 3
    center: tuple | None = None
    radius: float | None = None
    levels: tuple = (8, 16, 32, 48)
    tau0: tuple = (1.0, 0.1, 0.01, 0.0)
    precond: str = "both"
    sweep_delta: float = 0.1
    sweep_step: float = 0.01
    seed: int = 0
    deterministic: bool = False
    out: str | None = None

    def __post_init__(self):
        self.levels = tuple(int(n) for n in self.levels)
        self.tau0 = tuple(float(t) for t in self.tau0)
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly increasing")
        if any(t < 0 for t in self.tau0):
            raise ValueError("tau0 values must be nonnegative")
        if self.precond not in ("none", "diag", "both"):
            raise ValueError("precond must be none, diag or both")

    @property
    def surface(self) -> AnalyticSurface:
        if self.dim == 3:
            center = self.center or (0.5, 0.5, 0.5)
            radius = self.radius or 0.5
        else:
            center = self.center or (0.5, 0.5)
            radius = self.radius or 0.3
        return AnalyticSurface(tuple(center), radius)


def background_mesh(dim: int, level: int) -> BackgroundMesh:
    """3D: unit cube padded by two cells per side; 2D: the unit square.

    ``level`` is the number of cells across the unit interval, so ``h = 1/level``.
    """
    if dim == 3:
        box, n = padded_unit_box(3, level)
    else:
        box, n = ((0.0, 1.0), (0.0, 1.0)), level
    return build_background_mesh(box, n, dim)


@dataclass(frozen=True, eq=False)
class Discretization:
    surface: AnalyticSurface
    mesh: BackgroundMesh
    field: LevelSetField
    cut: CutSurface
    dofs: DofMap
    stiffness: object
    stabilization: object
    constraint: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.dofs.n_dofs

    def system(self, tau0: float, load=None):
        b = (np.zeros(self.n_dofs) if load is None else
             assemble_load(self.cut, self.mesh, self.surface, load, self.dofs))
        return build_system(self.stiffness, self.stabilization, tau0, self.constraint, b)


def discretize(surface: AnalyticSurface, mesh: BackgroundMesh) -> Discretization:
    field_ = interpolate_nodal(surface, mesh)
    cut = cut_surface(field_)
    dofs = DofMap.from_cut(mesh, cut)
    if cut.is_empty:
        return Discretization(surface, mesh, field_, cut, dofs, None, None,
                              np.zeros(0))
    return Discretization(
        surface, mesh, field_, cut, dofs,
        assemble_stiffness(cut, mesh, dofs),
        assemble_stabilization(mesh, cut.active_faces, dofs),
        mean_constraint(cut, mesh, dofs),
    )


def spectrum_summary(system, tau0: float):
    """Condition info plus a singular flag.

    The unstabilized system always carries one zero mode (the nodal level
    set); any further eigenvalue under the threshold means the first
    eigenvalue the condition number should be based on is numerically zero.
    """
    info = condition_number(eigenvalues_sym(system.matrix))
    expected = 1 if tau0 == 0 else 0
    return info, info.n_zero > expected


@contextlib.contextmanager
def _maybe_single_thread(deterministic: bool):
    if deterministic:
        with threadpool_limits(limits=1):
            yield
    else:
        yield


def _with_rates(rows, key, value, out="R"):
    groups = {}
    for row in rows:
        groups.setdefault(key(row), []).append(row)
    for group in groups.values():
        prev = None
        for row in group:
            row[out] = ""
            q = row.get(value)
            if prev is not None and _finite_pos(q) and _finite_pos(prev[value]) \
                    and row["N"] > prev["N"]:
                row[out] = float(rate([prev["N"], row["N"]], [prev[value], q])[0])
            prev = row if _finite_pos(q) else None


def _finite_pos(q) -> bool:
    return isinstance(q, float) and math.isfinite(q) and q > 0


def run_converge(config: ExperimentConfig) -> list[dict]:
    if config.dim != 3:
        raise ValueError("the convergence study runs on the sphere (dim=3)")
    surface = config.surface
    sgrad = problems.surface_grad(surface, problems.grad_u)
    rows = []
    with _maybe_single_thread(config.deterministic):
        for level in config.levels:
            t0 = time.perf_counter()
            disc = discretize(surface, background_mesh(3, level))
            setup = time.perf_counter() - t0
            for tau0 in config.tau0:
                rec = LevelRecord(disc.n_dofs, disc.mesh.h, tau0)
                row = {"tau0": tau0, "level": level, "N": disc.n_dofs,
                       "h": disc.mesh.h, "seed": config.seed}
                if disc.cut.is_empty:
                    rows.append({**row, "status": EMPTY})
                    continue
                t1 = time.perf_counter()
                try:
                    u, _ = solve(disc.system(tau0, problems.load))
                except SingularSystemError as err:
                    log.warning("level %d tau0 %g: %s", level, tau0, err)
                    rows.append({**row, "status": FAILED})
                    continue
                rec.e_h = l2_error(u, surface, problems.u_exact, disc.cut, disc.mesh, disc.dofs)
                rec.energy_err = energy_error(u, surface, sgrad, disc.cut, disc.mesh, disc.dofs)
                rec.face_err = face_error(u, surface, problems.u_exact, disc.stabilization,
                                          tau0, disc.mesh, disc.dofs)
                geom = geometry_report(surface, disc.cut)
                rec.max_rho, rec.max_angle = geom.max_rho, geom.max_angle
                rec.wall_ms = 0.0 if config.deterministic else \
                    1e3 * (setup + time.perf_counter() - t1)
                rows.append({**row, "e_h": rec.e_h, "energy_err": rec.energy_err,
                             "face_err": rec.face_err, "max_rho": rec.max_rho,
                             "max_angle": rec.max_angle, "wall_ms": rec.wall_ms,
                             "status": OK})
                log.info("level %d tau0 %g N %d e_h %.3e", level, tau0, rec.n_dofs, rec.e_h)
    rows.sort(key=lambda r: (r["tau0"], r["level"]))
    _with_rates(rows, key=lambda r: r["tau0"], value="e_h")
    return rows


def run_condition(config: ExperimentConfig) -> list[dict]:
    surface = config.surface
    variants = {"none": ["none"], "diag": ["diag"], "both": ["none", "diag"]}[config.precond]
    rows = []
    with _maybe_single_thread(config.deterministic):
        for level in config.levels:
            disc = discretize(surface, background_mesh(config.dim, level))
            for tau0 in config.tau0:
                for pre in variants:
                    row = {"tau0": tau0, "precond": pre, "level": level,
                           "N": disc.n_dofs, "seed": config.seed}
                    if disc.cut.is_empty:
                        rows.append({**row, "status": EMPTY})
                        continue
                    system = disc.system(tau0)
                    if pre == "diag":
                        system = diagonal_scaling(system)
                    info, singular = spectrum_summary(system, tau0)
                    rows.append({**row, "kappa": math.inf if singular else info.kappa,
                                 "n_neg": info.n_negative, "n_zero": info.n_zero,
                                 "status": SINGULAR if singular else OK})
    rows.sort(key=lambda r: (r["tau0"], r["precond"], r["level"]))
    _with_rates(rows, key=lambda r: (r["tau0"], r["precond"]), value="kappa")
    return rows


def sweep_positions(delta: float, step: float) -> np.ndarray:
    count = int(round(delta / step))
    return np.arange(count + 1) * step


def run_sweep(config: ExperimentConfig) -> list[dict]:
    """Translate the circle to the left in steps and record condition numbers."""
    if config.dim != 2:
        raise ValueError("the translation sweep runs on the circle (dim=2)")
    base = config.surface
    mesh = background_mesh(2, config.levels[0])
    rows = []
    with _maybe_single_thread(config.deterministic):
        for delta in sweep_positions(config.sweep_delta, config.sweep_step):
            disc = discretize(base.translated((-delta, 0.0)), mesh)
            for tau0 in config.tau0:
                row = {"delta": float(delta), "tau0": tau0, "N": disc.n_dofs,
                       "seed": config.seed}
                if disc.cut.is_empty:
                    rows.append({**row, "status": EMPTY})
                    continue
                info, singular = spectrum_summary(disc.system(tau0), tau0)
                rows.append({**row, "kappa": "singular" if singular else info.kappa,
                             "n_zero": info.n_zero,
                             "status": SINGULAR if singular else OK})
    rows.sort(key=lambda r: (r["tau0"], r["delta"]))
    for tau0 in config.tau0:
        kappas = [r.get("kappa") for r in rows if r["tau0"] == tau0]
        rows.append({"delta": "max/min", "tau0": tau0, "kappa": kappa_variation(kappas),
                     "status": "summary", "seed": config.seed})
    return rows


def kappa_variation(kappas) -> float:
    """``max / min`` over a sweep; any singular or missing entry gives ``inf``."""
    vals = []
    for k in kappas:
        if not isinstance(k, float) or not math.isfinite(k):
            return math.inf
        vals.append(k)
    return max(vals) / min(vals) if vals else math.nan


RUNNERS = {"converge": (run_converge, CONVERGE_COLUMNS),
           "condition": (run_condition, CONDITION_COLUMNS),
           "sweep": (run_sweep, SWEEP_COLUMNS)}


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    return str(v)


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c, "")) for c in columns])
    return buf.getvalue()


def run(config: ExperimentConfig):
    """Run the configured experiment; returns ``(rows, csv_text)``."""
    runner, columns = RUNNERS[config.experiment]
    rows = runner(config)
    text = to_csv(rows, columns)
    if config.out:
        with open(config.out, "w", newline="") as fh:
            fh.write(text)
    return rows, text


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    """Default levels and parameters for each study."""
    base = {
        "converge": dict(dim=3, levels=(8, 16, 32, 48), tau0=(1.0, 0.1, 0.01, 0.0)),
        "condition": dict(dim=3, levels=(8, 12, 16), tau0=(1.0, 0.01, 0.0)),
        "sweep": dict(dim=2, levels=(32,), tau0=(0.0, 0.1)),
    }[experiment]
    return ExperimentConfig(experiment=experiment, **{**base, **overrides})
