import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.spatial import ConvexHull

from cutfem_lb import problems
from cutfem_lb.cutgeom import (
    NotCutError, _batch_cut, active_faces, classify_cells, cut_cell, cut_surface,
    geometry_report, level_set_gradient,
)
from cutfem_lb.experiments import background_mesh
from cutfem_lb.levelset import AnalyticSurface, LevelSetField, interpolate_nodal
from cutfem_lb.mesh import build_background_mesh

from conftest import sphere_disc

REF_TET = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
REF_TRI = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)


def plane_section_area(vertices, values):
    """Area of {linear interpolant = 0} in a tet: edge crossings, then a 2D hull."""
    pts = []
    for a in range(4):
        for b in range(a + 1, 4):
            if values[a] * values[b] < 0:
                t = values[a] / (values[a] - values[b])
                pts.append(vertices[a] + t * (vertices[b] - vertices[a]))
    pts = np.array(pts)
    n = level_set_gradient(vertices, values)
    n /= np.linalg.norm(n)
    u = np.cross(n, [1, 0, 0] if abs(n[0]) < 0.9 else [0, 1, 0])
    u /= np.linalg.norm(u)
    w = np.cross(n, u)
    flat = np.column_stack([(pts - pts[0]) @ u, (pts - pts[0]) @ w])
    return ConvexHull(flat).volume


def test_single_triangle_case():
    pieces, measures, normal = cut_cell(REF_TET, [-1, 1, 1, 1])
    assert pieces.shape == (1, 3, 3)
    assert sorted(map(tuple, pieces[0])) == sorted([(0.5, 0, 0), (0, 0.5, 0), (0, 0, 0.5)])
    assert measures[0] == pytest.approx(np.sqrt(3) / 8)
    assert np.allclose(normal, np.ones(3) / np.sqrt(3))


def test_quad_case():
    vals = np.array([-1, -1, 1, 1.0])
    pieces, measures, normal = cut_cell(REF_TET, vals)
    assert pieces.shape == (2, 3, 3)
    corners = {tuple(np.round(p, 12)) for p in pieces.reshape(-1, 3)}
    assert corners == {(0, .5, 0), (0, 0, .5), (.5, .5, 0), (.5, 0, .5)}
    assert measures.sum() == pytest.approx(plane_section_area(REF_TET, vals), rel=1e-12)
    # split from the crossing on the lowest-numbered edge, (0,2)
    assert np.allclose(pieces[0, 0], [0, .5, 0]) and np.allclose(pieces[1, 0], [0, .5, 0])


def test_segment_case():
    pieces, measures, normal = cut_cell(REF_TRI, [-1, 1, 1])
    assert sorted(map(tuple, pieces[0])) == [(0, .5), (.5, 0)]
    assert measures[0] == pytest.approx(np.sqrt(2) / 2)
    assert np.allclose(normal, np.ones(2) / np.sqrt(2))


def test_uncut_cell_raises():
    with pytest.raises(NotCutError, match="cell not cut"):
        cut_cell(REF_TET, [1, 2, 3, 4])


tets = st.lists(st.floats(-1, 1), min_size=12, max_size=12).map(
    lambda v: np.reshape(v, (4, 3)))
values = st.lists(st.floats(-1, 1).filter(lambda v: abs(v) > 1e-3), min_size=4, max_size=4)


@given(tets, values)
@settings(max_examples=200, deadline=None)
def test_cut_properties(verts, vals):
    vals = np.array(vals)
    assume(abs(np.linalg.det(verts[1:] - verts[0])) > 1e-2)
    assume((vals < 0).any() and (vals > 0).any())
    pieces, measures, normal = cut_cell(verts, vals)
    grad = level_set_gradient(verts, vals)
    scale = np.abs(vals).max()
    for p in pieces:
        # crossings lie on the zero set of the cell's interpolant
        interp = vals[0] + (p - verts[0]) @ grad
        assert np.all(np.abs(interp) <= 1e-12 * scale * max(1, np.abs(grad).max()))
        assert abs(normal @ (p[1] - p[0])) <= 1e-12 * max(1, np.abs(p).max())
        assert abs(normal @ (p[2] - p[0])) <= 1e-12 * max(1, np.abs(p).max())
    assert np.all(measures >= 0)
    assert normal @ grad > 0
    assert measures.sum() == pytest.approx(plane_section_area(verts, vals), rel=1e-8, abs=1e-12)
    # batch path agrees with the per-cell routine
    cells, bp, bm, bn = _batch_cut(verts[None], vals[None])
    assert np.array_equal(bp, pieces) and np.allclose(bn[0], normal)


def test_classify_examples():
    m = build_background_mesh(((0, 1),) * 3, 1, 3)
    s = AnalyticSurface((0.0, 0.0, 0.0), 1.0)
    f = LevelSetField(s, m, np.ones(m.n_nodes))
    assert len(classify_cells(f)) == 0
    tet = build_background_mesh(((0, 1),) * 3, 1, 3)
    vals = np.ones(tet.n_nodes)
    vals[0] = -1
    act = classify_cells(LevelSetField(s, tet, vals))
    assert np.array_equal(act, np.nonzero((tet.cells == 0).any(axis=1))[0])


def test_classify_matches_sampling_oracle():
    disc = sphere_disc(8)
    mesh, field = disc.mesh, disc.field
    rng = np.random.default_rng(0)
    lam = rng.dirichlet(np.ones(4), size=10_000 - 4)
    lam = np.vstack([np.eye(4), lam])  # closure: include the vertices
    vals = field.cell_values()
    oracle = []
    for start in range(0, mesh.n_cells, 500):
        s = lam @ vals[start:start + 500].T
        oracle.append((s.min(axis=0) < 0) & (s.max(axis=0) > 0))
    oracle = np.nonzero(np.concatenate(oracle))[0]
    assert np.array_equal(classify_cells(field), oracle)


def test_active_faces_examples():
    m = build_background_mesh(((0, 1),) * 2, 1, 2)
    assert len(active_faces(m, [0])) == 0
    assert list(active_faces(m, [0, 1])) == [0]


def test_active_faces_match_brute_force():
    disc = sphere_disc(8)
    act = set(disc.cut.active_cells.tolist())
    brute = [f for f, (a, b) in enumerate(disc.mesh.face_cells.tolist()) if a in act and b in act]
    assert disc.cut.active_faces.tolist() == brute


def test_cut_surface_consistency():
    disc = sphere_disc(8)
    cut = disc.cut
    assert set(cut.owner.tolist()) == set(cut.active_cells.tolist())
    assert np.all(np.diff(cut.owner) >= 0)
    assert np.all(cut.area > 0)
    assert cut.total_area == pytest.approx(cut.area.sum())
    tri = next(iter(cut.triangles))
    assert tri.owner == cut.owner[0]


def test_empty_cut():
    m = build_background_mesh(((2, 3),) * 3, 2, 3)
    cut = cut_surface(interpolate_nodal(problems.SPHERE, m))
    assert cut.is_empty and len(cut.active_cells) == 0 and cut.total_area == 0


def test_planar_surface_geometry_report():
    # a huge sphere is nearly flat: both quantities small; exactly planar
    # behaviour is covered by the zero-level of an affine interpolant
    m = build_background_mesh(((0, 1),) * 3, 4, 3)
    s = AnalyticSurface((0.5, 0.5, -1e6), 1e6 + 0.37)
    rep = geometry_report(s, cut_surface(interpolate_nodal(s, m)))
    assert rep.max_rho < 1e-6 and rep.max_angle < 1e-6


def test_geometry_convergence_ratios():
    reps = [geometry_report(problems.SPHERE, sphere_disc(m).cut) for m in (8, 16)]
    assert 3 <= reps[0].max_rho / reps[1].max_rho <= 5
    assert 1.5 <= reps[0].max_angle / reps[1].max_angle <= 2.8


def test_area_converges_quadratically():
    levels = (8, 16, 32)
    err = [abs(sphere_disc(m).cut.total_area - np.pi) for m in levels]
    h = [1 / m for m in levels]
    C = max(e / hh**2 for e, hh in zip(err[:2], h[:2]))
    assert err[2] <= C * h[2] ** 2


def test_csv_dump(tmp_path):
    disc = sphere_disc(8)
    disc.cut.to_csv(tmp_path / "cut.csv")
    lines = (tmp_path / "cut.csv").read_text().splitlines()
    assert len(lines) == disc.cut.n_pieces + 1
    assert lines[0].split(",")[0] == "owner"
