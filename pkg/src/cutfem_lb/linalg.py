"""Sparse solves, symmetric spectra and the condition-number policy."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import LinearSystem

log = logging.getLogger(__name__)

DENSE_LIMIT = 4000
RESIDUAL_TOL = 1e-10
ZERO_TOL = 1e-10


class SingularSystemError(RuntimeError):
    pass


def max_norm(a) -> float:
    if sp.issparse(a):
        return float(abs(a).max()) if a.nnz else 0.0
    return float(np.abs(a).max()) if np.size(a) else 0.0


def is_symmetric(a, rtol: float = 0.0) -> bool:
    """Symmetry to ``rtol * max_norm(a)``; ``rtol=0`` demands exact equality."""
    diff = a - a.T
    return max_norm(diff) <= rtol * max_norm(a)


def _residual(mat, x, b) -> float:
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(mat @ x - b) / nb)


def solve(system: LinearSystem):
    """Solve the bordered system; returns ``(u, multiplier)``.

    Sparse LU first. If it breaks down or misses the residual target, MINRES
    is tried (it handles consistent singular systems such as the unstabilized
    one, whose extra kernel vector vanishes on the discrete surface).
    """
    mat = system.matrix
    b = system.rhs
    n = system.n_dofs
    if not np.any(b):
        return np.zeros(n), 0.0

    diagnostics = []
    x = None
    try:
        x = spla.splu(mat.tocsc()).solve(b)
        res = _residual(mat, x, b) if np.all(np.isfinite(x)) else np.inf
        if res > RESIDUAL_TOL:
            diagnostics.append(f"LU residual {res:.3e}")
            x = None
    except RuntimeError as err:
        diagnostics.append(f"LU breakdown: {err}")

    if x is None:
        y, info = spla.minres(mat, b, rtol=RESIDUAL_TOL * 1e-2, maxiter=50 * mat.shape[0])
        res = _residual(mat, y, b)
        if res <= RESIDUAL_TOL:
            log.info("LU failed (%s); MINRES converged", "; ".join(diagnostics))
            x = y
        else:
            diagnostics.append(f"MINRES info={info} residual {res:.3e}")
            raise SingularSystemError("; ".join(diagnostics))
    return x[:n], float(x[n])


def eigenvalues_sym(a, mode: str = "auto", n_small: int = 8) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix.

    ``mode="all"`` returns the full spectrum (dense LAPACK). ``"extremal"``
    returns the largest eigenvalue together with the ``n_small`` eigenvalues
    nearest zero (shift-invert Lanczos). ``"auto"`` picks ``all`` up to
    ``DENSE_LIMIT`` rows.
    """
    if not is_symmetric(a, 1e-12):
        raise ValueError("matrix is not symmetric")
    n = a.shape[0]
    if mode == "auto":
        mode = "all" if n <= DENSE_LIMIT else "extremal"
    if mode == "all":
        dense = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)
        return sla.eigvalsh(dense)
    if mode != "extremal":
        raise ValueError(f"unknown mode {mode!r}")
    a = sp.csc_matrix(a)
    top = spla.eigsh(a, k=1, which="LA", return_eigenvectors=False)
    # shift slightly off zero so exactly singular matrices can be factorised
    shift = -1e-7 * abs(top[0])
    near = spla.eigsh(a, k=min(n_small, n - 2), sigma=shift, which="LM",
                      return_eigenvectors=False)
    return np.sort(np.concatenate([near, top]))


@dataclass(frozen=True)
class ConditionInfo:
    kappa: float
    n_negative: int
    n_zero: int
    lambda_max: float
    lambda_min_positive: float


def condition_number(eigs, rel_tol: float = ZERO_TOL) -> ConditionInfo:
    """Largest eigenvalue over the first eigenvalue above ``rel_tol * lambda_max``.

    Eigenvalues below the threshold (the multiplier's negative eigenvalue,
    spurious zero modes) are counted, not used.
    """
    eigs = np.sort(np.asarray(eigs, dtype=float))
    lmax = eigs[-1]
    thr = rel_tol * lmax
    positive = eigs[eigs > thr]
    if lmax <= 0 or len(positive) == 0:
        raise ValueError("no eigenvalue above the zero threshold")
    return ConditionInfo(
        kappa=float(lmax / positive[0]),
        n_negative=int(np.sum(eigs < -thr)),
        n_zero=int(np.sum(np.abs(eigs) <= thr)),
        lambda_max=float(lmax),
        lambda_min_positive=float(positive[0]),
    )
