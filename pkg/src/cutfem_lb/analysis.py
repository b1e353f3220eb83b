"""Error norms, convergence rates and empirical norm-equivalence constants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import DofMap, basis_values, cell_gradients, surface_quadrature
from .cutgeom import CutSurface
from .levelset import AnalyticSurface, closest_point
from .mesh import BackgroundMesh


@dataclass
class LevelRecord:
    n_dofs: int
    h: float
    tau0: float
    e_h: float = math.nan
    energy_err: float = math.nan
    face_err: float = math.nan
    kappa: float = math.nan
    max_rho: float = math.nan
    max_angle: float = math.nan
    wall_ms: float = 0.0
    extra: dict = field(default_factory=dict)


def evaluate_at_quadrature(u_h, cut: CutSurface, mesh: BackgroundMesh, dofs: DofMap):
    pts, w = surface_quadrature(cut)
    phi = basis_values(mesh, cut.owner, pts)
    local = np.asarray(u_h)[dofs.cell_dofs(mesh, cut.owner)]
    return pts, w, np.einsum("mqk,mk->mq", phi, local)


def l2_error(u_h, surface: AnalyticSurface, u_exact, cut: CutSurface,
             mesh: BackgroundMesh, dofs: DofMap) -> float:
    """L2 distance on the discrete surface between ``u_h`` and ``u_exact o p``.

    The difference is first shifted to zero mean, since both functions are
    only defined up to a constant.
    """
    pts, w, uh = evaluate_at_quadrature(u_h, cut, mesh, dofs)
    diff = uh - u_exact(closest_point(surface, pts))
    diff = diff - np.sum(w * diff) / np.sum(w)
    return float(np.sqrt(np.sum(w * diff**2)))


def discrete_tangential_gradient(u_h, cut: CutSurface, mesh: BackgroundMesh,
                                 dofs: DofMap) -> np.ndarray:
    """``P_h grad u_h`` on every piece (constant per piece)."""
    grads = cell_gradients(mesh, cut.owner)
    local = np.asarray(u_h)[dofs.cell_dofs(mesh, cut.owner)]
    g = np.einsum("mkd,mk->md", grads, local)
    n = cut.normal
    return g - np.sum(g * n, axis=1, keepdims=True) * n


def energy_error(u_h, surface: AnalyticSurface, surface_grad_exact, cut: CutSurface,
                 mesh: BackgroundMesh, dofs: DofMap) -> float:
    """L2 norm on the discrete surface of the tangential-gradient error."""
    pts, w = surface_quadrature(cut)
    gh = discrete_tangential_gradient(u_h, cut, mesh, dofs)
    ge = surface_grad_exact(closest_point(surface, pts))
    diff = gh[:, None, :] - ge
    return float(np.sqrt(np.sum(w * np.sum(diff**2, axis=-1))))


def face_error(u_h, surface: AnalyticSurface, u_exact, stabilization, tau0: float,
               mesh: BackgroundMesh, dofs: DofMap) -> float:
    """``sqrt(j_h(e, e))`` with ``e = u_h - I_h(u_exact o p)``."""
    interp = u_exact(closest_point(surface, mesh.nodes[dofs.nodes]))
    e = np.asarray(u_h) - interp
    return float(np.sqrt(max(tau0 * (e @ (stabilization @ e)), 0.0)))


def rate(ns, qs, *, hs=None) -> np.ndarray:
    """Observed orders ``ln(q_k/q_{k-1}) / ln(h_k/h_{k-1})``.

    By default ``h`` is taken proportional to ``N^{-1/2}``; pass ``hs`` to use
    mesh sizes directly. Errors give positive rates, growing condition
    numbers negative ones.
    """
    qs = np.asarray(qs, dtype=float)
    if hs is None:
        ns = np.asarray(ns, dtype=float)
        if len(ns) != len(qs):
            raise ValueError("ns and qs differ in length")
        if np.any(np.diff(ns) <= 0):
            raise ValueError("N must be strictly increasing")
        hs = ns**-0.5
    hs = np.asarray(hs, dtype=float)
    if len(qs) < 2:
        raise ValueError("need at least two levels")
    if np.any(qs <= 0):
        raise ValueError("values must be positive")
    return np.log(qs[1:] / qs[:-1]) / np.log(hs[1:] / hs[:-1])


def mass_matrix(mesh: BackgroundMesh, cells, dofs: DofMap) -> sp.csr_matrix:
    """Exact P1 mass matrix over whole cells."""
    cells = np.asarray(cells, dtype=int)
    d = mesh.dim
    vol = np.abs(mesh.cell_volumes()[cells])
    ref = (np.ones((d + 1, d + 1)) + np.eye(d + 1)) / ((d + 1) * (d + 2))
    local = vol[:, None, None] * ref
    cd = dofs.cell_dofs(mesh, cells)
    k = d + 1
    rows = np.repeat(cd, k, axis=1).ravel()
    cols = np.tile(cd, (1, k)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)),
                         shape=(dofs.n_dofs, dofs.n_dofs)).tocsr()


@dataclass(frozen=True)
class FunctionalConstants:
    poincare: float
    inverse: float
    samples: int
    seed: int


def functional_constants(stiffness, stabilization, tau0: float, c, mass, h: float,
                         samples: int = 200, seed: int = 0) -> FunctionalConstants:
    """Largest observed ratios for random zero-mean discrete functions.

    ``poincare = max ||v||_{Omega_h} / (h^{1/2} |||v|||_h)`` and
    ``inverse = max |||v|||_h / (h^{-3/2} ||v||_{Omega_h})``.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    c = np.asarray(c, dtype=float)
    energy = stiffness + tau0 * stabilization
    v = rng.standard_normal((len(c), samples))
    v -= np.outer(np.ones(len(c)), (c @ v) / c.sum())
    l2 = np.sqrt(np.einsum("is,is->s", v, mass @ v))
    tri = np.sqrt(np.einsum("is,is->s", v, energy @ v))
    return FunctionalConstants(
        poincare=float(np.max(l2 / (math.sqrt(h) * tri))),
        inverse=float(np.max(tri / (h**-1.5 * l2))),
        samples=samples,
        seed=seed,
    )
