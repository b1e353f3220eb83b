"""Structured simplex background meshes of axis-aligned boxes."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class BackgroundMesh:
    """Quasi-uniform simplex mesh with interior-face adjacency.

    ``face_cells[f] = (a, b)`` lists the two cells sharing interior face ``f``;
    ``face_normals[f]`` is a unit normal pointing from cell ``a`` to cell ``b``.
    Boundary faces are not stored.
    """

    dim: int
    nodes: np.ndarray          # (n_nodes, dim)
    cells: np.ndarray          # (n_cells, dim + 1)
    face_nodes: np.ndarray     # (n_faces, dim)
    face_cells: np.ndarray     # (n_faces, 2)
    face_normals: np.ndarray   # (n_faces, dim)
    face_measures: np.ndarray  # (n_faces,)
    h: float
    box: tuple = field(default=())

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.face_cells)

    def cell_volumes(self) -> np.ndarray:
        x = self.nodes[self.cells]
        edges = x[:, 1:, :] - x[:, :1, :]
        return np.linalg.det(edges) / math.factorial(self.dim)

    def to_csv(self, path) -> None:
        """Debug dump: one row per cell with its vertex coordinates."""
        x = self.nodes[self.cells].reshape(self.n_cells, -1)
        rows = np.column_stack([np.arange(self.n_cells), x])
        header = ",".join(
            f"v{k}_{ax}" for k in range(self.dim + 1) for ax in "xyz"[: self.dim]
        )
        np.savetxt(path, rows, delimiter=",", header="cell," + header,
                   comments="", fmt="%.12g")


# Kuhn/Freudenthal: one tetrahedron per axis permutation, walking the cube
# from corner (0,0,0) to (1,1,1).
_KUHN_TETS = []
for _perm in itertools.permutations(range(3)):
    _corner = np.zeros(3, dtype=int)
    _path = [tuple(_corner)]
    for _ax in _perm:
        _corner = _corner.copy()
        _corner[_ax] = 1
        _path.append(tuple(_corner))
    _KUHN_TETS.append(_path)

# Lower-left to upper-right diagonal.
_SQUARE_TRIS = [[(0, 0), (1, 0), (1, 1)], [(0, 0), (1, 1), (0, 1)]]


def build_background_mesh(box, cells_per_axis: int, dim: int) -> BackgroundMesh:
    """Mesh ``box = ((lo_x, hi_x), (lo_y, hi_y)[, (lo_z, hi_z)])``.

    Each grid square is split into two triangles, each grid cube into the
    six Kuhn tetrahedra. ``h`` is the grid-cell edge length along the first
    axis.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    n = int(cells_per_axis)
    if n < 1 or n != cells_per_axis:
        raise ValueError(f"cells_per_axis must be a positive integer, got {cells_per_axis}")
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if len(box) != dim:
        raise ValueError(f"box has {len(box)} axes, expected {dim}")
    if any(not hi > lo for lo, hi in box):
        raise ValueError(f"degenerate box {box}")

    axes = [np.linspace(lo, hi, n + 1) for lo, hi in box]
    # x varies fastest
    grids = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel(order="F") for g in grids], axis=1)

    strides = np.array([(n + 1) ** k for k in range(dim)])
    base = np.array(list(itertools.product(range(n), repeat=dim)))[:, ::-1]
    base_idx = base @ strides
    base_idx = np.sort(base_idx)
    template = _SQUARE_TRIS if dim == 2 else _KUHN_TETS
    local = np.array([[np.dot(v, strides) for v in simplex] for simplex in template])
    cells = (base_idx[:, None, None] + local[None, :, :]).reshape(-1, dim + 1)

    # positive orientation
    x = nodes[cells]
    det = np.linalg.det(x[:, 1:, :] - x[:, :1, :])
    flip = det < 0
    cells[flip, :2] = cells[flip, 1::-1]

    face_nodes, face_cells, normals, measures = _interior_faces(nodes, cells, dim)
    h = (box[0][1] - box[0][0]) / n
    return BackgroundMesh(dim, nodes, cells, face_nodes, face_cells, normals,
                          measures, h, box)


def _interior_faces(nodes, cells, dim):
    n_cells = len(cells)
    k = dim + 1
    # face opposite local vertex j
    local = [[i for i in range(k) if i != j] for j in range(k)]
    faces = np.concatenate([cells[:, loc] for loc in local])
    owner = np.tile(np.arange(n_cells), k)
    key = np.sort(faces, axis=1)
    order = np.lexsort(key.T[::-1])
    key = key[order]
    owner = owner[order]
    same = np.all(key[1:] == key[:-1], axis=1)
    first = np.nonzero(same)[0]
    face_nodes = key[first]
    a = owner[first]
    b = owner[first + 1]
    swap = a > b
    a, b = np.where(swap, b, a), np.where(swap, a, b)
    # deterministic face order: by (first cell, second cell)
    order = np.lexsort((b, a))
    face_nodes, a, b = face_nodes[order], a[order], b[order]

    x = nodes[face_nodes]
    edges = x[:, 1:, :] - x[:, :1, :]
    if dim == 2:
        e = edges[:, 0, :]
        normal = np.stack([e[:, 1], -e[:, 0]], axis=1)
    else:
        normal = np.cross(edges[:, 0, :], edges[:, 1, :])
    measure = simplex_measure(x)
    normal /= np.linalg.norm(normal, axis=1)[:, None]
    ca = nodes[cells[a]].mean(axis=1)
    cb = nodes[cells[b]].mean(axis=1)
    sign = np.sign(np.einsum("ij,ij->i", normal, cb - ca))
    normal *= sign[:, None]
    return face_nodes, np.stack([a, b], axis=1), normal, measure


def simplex_measure(points) -> np.ndarray:
    """Length of segments ``(..., 2, d)`` or area of triangles ``(..., 3, d)``."""
    points = np.asarray(points, dtype=float)
    e = points[..., 1:, :] - points[..., :1, :]
    if points.shape[-2] == 2:
        return np.linalg.norm(e[..., 0, :], axis=-1)
    if points.shape[-1] == 2:
        return 0.5 * np.abs(e[..., 0, 0] * e[..., 1, 1] - e[..., 0, 1] * e[..., 1, 0])
    return 0.5 * np.linalg.norm(np.cross(e[..., 0, :], e[..., 1, :]), axis=-1)


def face_normal_and_measure(mesh: BackgroundMesh, face: int):
    if not 0 <= face < mesh.n_faces:
        raise IndexError(f"face index {face} out of range [0, {mesh.n_faces})")
    return mesh.face_normals[face], float(mesh.face_measures[face])


def padded_unit_box(dim: int, cells_per_unit: int, pad: int = 2, lo=0.0, hi=1.0):
    """Box ``[lo, hi]^dim`` grown by ``pad`` grid cells on each side.

    Returns ``(box, cells_per_axis)`` such that ``h = (hi - lo) / cells_per_unit``.
    """
    h = (hi - lo) / cells_per_unit
    box = tuple((lo - pad * h, hi + pad * h) for _ in range(dim))
    return box, cells_per_unit + 2 * pad
