"""Discrete surface extraction from the nodal level set.

The zero set of the piecewise linear level set is planar inside each cell.
In 3D it is a triangle or a quadrilateral (split into two triangles); in 2D
it is a segment, which plays the role of a "triangle" with its length as
measure throughout the package.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .levelset import AnalyticSurface, LevelSetField, exact_normal, signed_distance
from .mesh import BackgroundMesh, simplex_measure


class NotCutError(ValueError):
    pass


@dataclass(frozen=True)
class CutTriangle:
    owner: int
    vertices: np.ndarray
    area: float
    normal: np.ndarray


@dataclass(frozen=True, eq=False)
class CutSurface:
    """Surface pieces ordered by owner cell.

    ``vertices`` has shape ``(n_pieces, dim, dim)``: ``dim`` points per piece.
    """

    dim: int
    active_cells: np.ndarray
    owner: np.ndarray
    vertices: np.ndarray
    area: np.ndarray
    normal: np.ndarray
    active_faces: np.ndarray

    @property
    def total_area(self) -> float:
        return float(self.area.sum())

    @property
    def n_pieces(self) -> int:
        return len(self.owner)

    @property
    def is_empty(self) -> bool:
        return len(self.owner) == 0

    @property
    def triangles(self):
        for k in range(self.n_pieces):
            yield CutTriangle(int(self.owner[k]), self.vertices[k],
                              float(self.area[k]), self.normal[k])

    def to_csv(self, path) -> None:
        n = self.n_pieces
        rows = np.column_stack([self.owner, self.vertices.reshape(n, -1),
                                self.area, self.normal])
        ax = "xyz"[: self.dim]
        cols = ["owner"]
        cols += [f"p{k}_{a}" for k in range(self.dim) for a in ax]
        cols += ["area"] + [f"n_{a}" for a in ax]
        np.savetxt(path, rows, delimiter=",", header=",".join(cols),
                   comments="", fmt="%.12g")


def classify_cells(field: LevelSetField) -> np.ndarray:
    """Indices of cells whose nodal level-set values change sign."""
    v = field.cell_values()
    neg = (v < 0).any(axis=1)
    pos = (v > 0).any(axis=1)
    return np.nonzero(neg & pos)[0]


def level_set_gradient(vertices, values) -> np.ndarray:
    vertices = np.asarray(vertices, dtype=float)
    values = np.asarray(values, dtype=float)
    return np.linalg.solve(vertices[1:] - vertices[0], values[1:] - values[0])


def _edges(dim):
    return list(itertools.combinations(range(dim + 1), 2))


def _rings(neg) -> list[tuple[int, ...]]:
    """Cut-edge indices making up each surface piece for a sign pattern."""
    neg = np.asarray(neg, dtype=bool)
    dim = len(neg) - 1
    edges = _edges(dim)
    cut = [e for e, (a, b) in enumerate(edges) if neg[a] != neg[b]]
    if len(cut) == dim:
        return [tuple(cut)]
    a, b = np.nonzero(neg)[0]
    c, d = np.nonzero(~neg)[0]
    index = {pair: e for e, pair in enumerate(edges)}
    ring = [index[tuple(sorted(p))] for p in ((a, c), (a, d), (b, d), (b, c))]
    start = ring.index(min(ring))
    ring = ring[start:] + ring[:start]
    return [(ring[0], ring[1], ring[2]), (ring[0], ring[2], ring[3])]


def _lone_vertex(neg) -> int | None:
    """Vertex whose sign differs from all others, if any."""
    neg = np.asarray(neg, dtype=bool)
    for group in (neg, ~neg):
        if group.sum() == 1:
            return int(np.nonzero(group)[0][0])
    return None


def _piece_measures(vertices, values, neg, pieces):
    """Measures of the pieces of cells sharing one sign pattern.

    A single triangle (or segment) is measured from offsets relative to the
    lone vertex, which stays accurate when the cut passes within rounding
    distance of that vertex.
    """
    lone = _lone_vertex(neg)
    if lone is None:
        return simplex_measure(pieces)
    dim = vertices.shape[-1]
    ring = _rings(neg)[0]
    edges = _edges(dim)
    others = [b if a == lone else a for a, b in (edges[e] for e in ring)]
    rl = values[..., lone, None]
    t = rl / (rl - values[..., others])
    off = t[..., None] * (vertices[..., others, :] - vertices[..., lone, None, :])
    return simplex_measure(off)


def cut_cell(vertices, values):
    """Intersect one simplex with the zero set of its linear interpolant.

    Returns ``(pieces, measures, normal)`` where ``pieces`` has shape
    ``(k, dim, dim)`` with ``k = 1`` or ``2`` and ``normal`` is the unit
    gradient of the interpolant (pointing toward positive values). A quad is
    split along the diagonal from the point on its lowest-numbered edge.
    """
    vertices = np.asarray(vertices, dtype=float)
    values = np.asarray(values, dtype=float)
    dim = vertices.shape[1]
    neg = values < 0
    if neg.all() or (~neg).all():
        raise NotCutError("cell not cut")
    if np.any(values == 0):
        raise ValueError("nodal level-set values must be nonzero")

    points = {}
    for e, (a, b) in enumerate(_edges(dim)):
        if neg[a] != neg[b]:
            t = values[a] / (values[a] - values[b])
            points[e] = vertices[a] + t * (vertices[b] - vertices[a])
    pieces = np.array([[points[e] for e in ring] for ring in _rings(neg)])
    measures = np.atleast_1d(_piece_measures(vertices, values, neg, pieces))
    grad = level_set_gradient(vertices, values)
    return pieces, measures, grad / np.linalg.norm(grad)


def _batch_cut(vertices, values):
    """Vectorised :func:`cut_cell` over ``(M, dim+1, dim)`` cells."""
    m, k, dim = vertices.shape
    edges = _edges(dim)
    a = np.array([e[0] for e in edges])
    b = np.array([e[1] for e in edges])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = values[:, a] / (values[:, a] - values[:, b])
        pts = vertices[:, a] + t[..., None] * (vertices[:, b] - vertices[:, a])

    neg = values < 0
    code = (neg * (1 << np.arange(k))).sum(axis=1)
    cells, subs, pieces, measures = [], [], [], []
    for c in np.unique(code):
        sel = np.nonzero(code == c)[0]
        pattern = np.array([(c >> i) & 1 == 1 for i in range(k)])
        rings = _rings(pattern)
        group = np.stack([pts[sel][:, list(ring)] for ring in rings], axis=1)
        if len(rings) == 1:
            mes = _piece_measures(vertices[sel], values[sel], pattern, group[:, 0])[:, None]
        else:
            mes = simplex_measure(group)
        for s in range(len(rings)):
            cells.append(sel)
            subs.append(np.full(len(sel), s))
            pieces.append(group[:, s])
            measures.append(mes[:, s])
    cells = np.concatenate(cells)
    subs = np.concatenate(subs)
    pieces = np.concatenate(pieces)
    measures = np.concatenate(measures)
    order = np.lexsort((subs, cells))
    cells, pieces, measures = cells[order], pieces[order], measures[order]

    grad = np.linalg.solve(vertices[:, 1:] - vertices[:, :1],
                           (values[:, 1:] - values[:, :1])[..., None])[..., 0]
    normal = grad / np.linalg.norm(grad, axis=1, keepdims=True)
    return cells, pieces, measures, normal[cells]


def active_faces(mesh: BackgroundMesh, active_cells) -> np.ndarray:
    """Interior faces whose two neighbouring cells are both active."""
    flag = np.zeros(mesh.n_cells, dtype=bool)
    flag[np.asarray(active_cells, dtype=int)] = True
    both = flag[mesh.face_cells[:, 0]] & flag[mesh.face_cells[:, 1]]
    return np.nonzero(both)[0]


def cut_surface(field: LevelSetField) -> CutSurface:
    """Extract the discrete surface, active cells and active faces."""
    mesh = field.mesh
    dim = mesh.dim
    cells = classify_cells(field)
    if len(cells) == 0:
        return CutSurface(dim, cells, np.zeros(0, dtype=int),
                          np.zeros((0, dim, dim)), np.zeros(0),
                          np.zeros((0, dim)), np.zeros(0, dtype=int))
    local, pieces, measures, normals = _batch_cut(
        mesh.nodes[mesh.cells[cells]], field.cell_values()[cells])
    return CutSurface(dim, cells, cells[local], pieces, measures, normals,
                      active_faces(mesh, cells))


@dataclass(frozen=True)
class GeometryReport:
    max_rho: float
    max_angle: float


def report_points(cut: CutSurface) -> np.ndarray:
    """Vertices and centroid of every piece, shape ``(n_pieces, dim + 1, dim)``."""
    centroid = cut.vertices.mean(axis=1, keepdims=True)
    return np.concatenate([cut.vertices, centroid], axis=1)


def geometry_report(surface: AnalyticSurface, cut: CutSurface) -> GeometryReport:
    """Max distance to the exact surface and max normal deviation on the cut."""
    if cut.is_empty:
        raise ValueError("empty cut surface")
    pts = report_points(cut)
    rho = np.abs(signed_distance(surface, pts))
    n = exact_normal(surface, pts)
    nh = np.broadcast_to(cut.normal[:, None, :], n.shape)
    cos = np.einsum("...i,...i->...", n, nh)
    if cut.dim == 2:
        sin = np.abs(n[..., 0] * nh[..., 1] - n[..., 1] * nh[..., 0])
    else:
        sin = np.linalg.norm(np.cross(n, nh), axis=-1)
    angle = np.arctan2(sin, cos)
    return GeometryReport(float(rho.max()), float(angle.max()))
