"""Bilinear forms, load vector and the bordered zero-mean system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .cutgeom import CutSurface
from .levelset import AnalyticSurface, closest_point
from .mesh import BackgroundMesh

SCALING_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class DofMap:
    """Degrees of freedom on the nodes of the active cells."""

    nodes: np.ndarray     # global node index of each dof, ascending
    node_to_dof: np.ndarray  # -1 for nodes without a dof

    @property
    def n_dofs(self) -> int:
        return len(self.nodes)

    @classmethod
    def from_cut(cls, mesh: BackgroundMesh, cut: CutSurface) -> "DofMap":
        nodes = np.unique(mesh.cells[cut.active_cells])
        node_to_dof = np.full(mesh.n_nodes, -1, dtype=int)
        node_to_dof[nodes] = np.arange(len(nodes))
        return cls(nodes, node_to_dof)

    def cell_dofs(self, mesh: BackgroundMesh, cells) -> np.ndarray:
        dofs = self.node_to_dof[mesh.cells[cells]]
        if np.any(dofs < 0):
            raise ValueError("cell has nodes without degrees of freedom")
        return dofs

    def restrict(self, nodal: np.ndarray) -> np.ndarray:
        """Pick dof entries out of a per-node array."""
        return np.asarray(nodal)[self.nodes]


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """``[[A_a + tau0 A_j, c], [c^T, 0]] [u; lam] = [b; 0]``."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    tau0: float
    n_dofs: int

    @property
    def size(self) -> int:
        return self.n_dofs + 1

    @property
    def stiffness(self) -> sp.csr_matrix:
        n = self.n_dofs
        return self.matrix[:n, :n]

    @property
    def constraint(self) -> np.ndarray:
        n = self.n_dofs
        return self.matrix[:n, n].toarray().ravel()

    @property
    def multiplier_index(self) -> int:
        return self.n_dofs


def tangential_project(g, n) -> np.ndarray:
    """``(I - n n^T) g``. Accepts a single vector or stacked rows."""
    g = np.asarray(g, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-12):
        raise ValueError("normal must have unit length")
    return g - np.sum(n * g, axis=-1, keepdims=True) * n


def cell_gradients(mesh: BackgroundMesh, cells) -> np.ndarray:
    """Gradients of the P1 basis on each cell, shape ``(M, dim+1, dim)``."""
    x = mesh.nodes[mesh.cells[cells]]
    inv = np.linalg.inv(x[:, 1:] - x[:, :1])
    tail = np.swapaxes(inv, 1, 2)
    head = -tail.sum(axis=1, keepdims=True)
    return np.concatenate([head, tail], axis=1)


def basis_values(mesh: BackgroundMesh, cells, points) -> np.ndarray:
    """P1 basis of ``cells[m]`` at ``points[m, q]``; shape ``(M, Q, dim+1)``."""
    x0 = mesh.nodes[mesh.cells[cells][:, 0]]
    grads = cell_gradients(mesh, cells)
    tail = np.einsum("mkd,mqd->mqk", grads[:, 1:], points - x0[:, None, :])
    head = 1.0 - tail.sum(axis=2, keepdims=True)
    return np.concatenate([head, tail], axis=2)


def surface_quadrature(cut: CutSurface):
    """Degree-2-exact rule on every piece: ``(points (P,3,dim), weights (P,3))``.

    Triangles use edge midpoints; segments use Simpson's rule.
    """
    v = cut.vertices
    if cut.dim == 3:
        pts = 0.5 * (v[:, [0, 1, 2]] + v[:, [1, 2, 0]])
        w = np.repeat(cut.area[:, None] / 3.0, 3, axis=1)
    else:
        pts = np.stack([v[:, 0], 0.5 * (v[:, 0] + v[:, 1]), v[:, 1]], axis=1)
        w = cut.area[:, None] * np.array([1.0, 4.0, 1.0]) / 6.0
    return pts, w


def _scatter(local: np.ndarray, dofs: np.ndarray, n: int) -> sp.csr_matrix:
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def symmetrize(mat: sp.spmatrix) -> sp.csr_matrix:
    return ((mat + mat.T) * 0.5).tocsr()


def assemble_stiffness(cut: CutSurface, mesh: BackgroundMesh, dofs: DofMap) -> sp.csr_matrix:
    """Tangential-gradient stiffness on the discrete surface (exact for P1)."""
    grads = cell_gradients(mesh, cut.owner)
    n = cut.normal
    proj = grads - np.einsum("mkd,md->mk", grads, n)[..., None] * n[:, None, :]
    local = cut.area[:, None, None] * np.einsum("mid,mjd->mij", proj, proj)
    return symmetrize(_scatter(local, dofs.cell_dofs(mesh, cut.owner), dofs.n_dofs))


def face_jumps(mesh: BackgroundMesh, faces):
    """Normal-gradient jumps of the basis across faces.

    Returns ``(nodes (F, dim+2), jumps (F, dim+2))``: the nodes of the first
    cell followed by the opposite node of the second cell, and the jump
    ``(n_F . grad phi)|_first - (n_F . grad phi)|_second`` for each.
    """
    faces = np.asarray(faces, dtype=int)
    ca, cb = mesh.face_cells[faces, 0], mesh.face_cells[faces, 1]
    na, nb = mesh.cells[ca], mesh.cells[cb]
    normal = mesh.face_normals[faces]
    ja = np.einsum("fkd,fd->fk", cell_gradients(mesh, ca), normal)
    jb = np.einsum("fkd,fd->fk", cell_gradients(mesh, cb), normal)

    in_a = (nb[:, :, None] == na[:, None, :])
    extra = nb[~in_a.any(axis=2)]
    nodes = np.concatenate([na, extra[:, None]], axis=1)
    pos = np.argmax(nb[:, :, None] == nodes[:, None, :], axis=2)
    jumps = np.concatenate([ja, np.zeros((len(faces), 1))], axis=1)
    rows = np.arange(len(faces))[:, None]
    np.subtract.at(jumps, (np.broadcast_to(rows, pos.shape), pos), jb)
    return nodes, jumps


def assemble_stabilization(mesh: BackgroundMesh, faces, dofs: DofMap) -> sp.csr_matrix:
    """Face-jump penalty with unit coefficient; no power of h is applied."""
    faces = np.asarray(faces, dtype=int)
    if len(faces) == 0:
        return sp.csr_matrix((dofs.n_dofs, dofs.n_dofs))
    nodes, jumps = face_jumps(mesh, faces)
    local = mesh.face_measures[faces][:, None, None] * jumps[:, :, None] * jumps[:, None, :]
    fdofs = dofs.node_to_dof[nodes]
    if np.any(fdofs < 0):
        raise ValueError("face touches a node without degrees of freedom")
    return symmetrize(_scatter(local, fdofs, dofs.n_dofs))


def assemble_load(cut: CutSurface, mesh: BackgroundMesh, surface: AnalyticSurface,
                  f, dofs: DofMap) -> np.ndarray:
    """``b_i = (f o p, phi_i)`` over the discrete surface.

    ``f`` maps an ``(..., dim)`` array of surface points to values.
    """
    b = np.zeros(dofs.n_dofs)
    if cut.is_empty:
        return b
    pts, w = surface_quadrature(cut)
    fe = f(closest_point(surface, pts))
    phi = basis_values(mesh, cut.owner, pts)
    local = np.einsum("mq,mq,mqk->mk", w, fe, phi)
    np.add.at(b, dofs.cell_dofs(mesh, cut.owner), local)
    return b


def mean_constraint(cut: CutSurface, mesh: BackgroundMesh, dofs: DofMap) -> np.ndarray:
    """``c_i`` = integral of ``phi_i`` over the discrete surface (vertex rule)."""
    c = np.zeros(dofs.n_dofs)
    if cut.is_empty:
        return c
    phi = basis_values(mesh, cut.owner, cut.vertices)
    w = cut.area / cut.dim
    local = w[:, None] * phi.sum(axis=1)
    np.add.at(c, dofs.cell_dofs(mesh, cut.owner), local)
    return c


def build_system(stiffness, stabilization, tau0: float, c, b) -> LinearSystem:
    if tau0 < 0:
        raise ValueError(f"tau0 must be nonnegative, got {tau0}")
    n = stiffness.shape[0]
    if stabilization.shape != (n, n) or len(c) != n or len(b) != n:
        raise ValueError("dimension mismatch")
    block = stiffness + tau0 * stabilization if tau0 else stiffness.copy()
    col = sp.csr_matrix(np.asarray(c, dtype=float).reshape(-1, 1))
    mat = sp.bmat([[block, col], [col.T, None]], format="csr")
    mat.sort_indices()
    rhs = np.append(np.asarray(b, dtype=float), 0.0)
    return LinearSystem(mat, rhs, float(tau0), n)


def diagonal_scaling(system: LinearSystem) -> LinearSystem:
    """Symmetric Jacobi scaling of the stiffness block.

    The multiplier row and column are scaled consistently; the multiplier
    itself keeps unit scale.
    """
    n = system.n_dofs
    diag = system.matrix.diagonal()[:n]
    top = diag.max() if n else 0.0
    if not top > 0:
        raise ValueError("stiffness block has no positive diagonal entry")
    d = np.maximum(diag, SCALING_FLOOR * top)
    s = np.append(1.0 / np.sqrt(d), 1.0)
    S = sp.diags(s)
    mat = symmetrize(S @ system.matrix @ S)
    return LinearSystem(mat, s * system.rhs, system.tau0, n)


def export_coo(matrix: sp.spmatrix, path) -> None:
    """Write ``row col value`` lines (0-based)."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{i} {j} {v:.17g}\n")
