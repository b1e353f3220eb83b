"""Manufactured Laplace-Beltrami problems on the unit-diameter sphere."""
from __future__ import annotations

import numpy as np

from .levelset import AnalyticSurface, sphere

SPHERE = sphere(center=(0.5, 0.5, 0.5), radius=0.5)


def u_exact(x):
    x = np.asarray(x, dtype=float)
    return (x[..., 0] - 0.5) * (x[..., 1] - 0.5) * (x[..., 2] - 0.5)


def grad_u(x):
    s = np.asarray(x, dtype=float) - 0.5
    return np.stack([s[..., 1] * s[..., 2], s[..., 0] * s[..., 2],
                     s[..., 0] * s[..., 1]], axis=-1)


def load(x):
    """Right-hand side; equals ``-Laplace_Beltrami(u_exact)`` on the sphere."""
    x = np.asarray(x, dtype=float)
    X, Y, Z = x[..., 0], x[..., 1], x[..., 2]
    num = 6 * (2 * X - 1) * (2 * Y - 1) * (2 * Z - 1)
    return num / (3 + 4 * X * (X - 1) + 4 * Y * (Y - 1) + 4 * Z * (Z - 1))


def surface_grad(surface: AnalyticSurface, grad):
    """Tangential gradient of a function with ambient gradient ``grad``, on the surface."""

    def g(y):
        n = (np.asarray(y) - np.asarray(surface.center)) / surface.radius
        v = grad(y)
        return v - np.sum(v * n, axis=-1, keepdims=True) * n

    return g
