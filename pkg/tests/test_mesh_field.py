import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dc_split.curves import ClosedConvexCurve, regular_polygon
from dc_split.errors import DomainError, MeshMismatchError
from dc_split.field import (
    PLField,
    add,
    evaluate,
    lipschitz_constant,
    negate,
    restrict_to_curve,
    restrict_to_segment,
    sample,
    scale,
    segment_crossings,
)
from dc_split.geometry import polygon_area
from dc_split.mesh import Triangulation, triangulate_grid

from conftest import rng


def test_unit_square_grids():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    m = triangulate_grid(sq, 2, 2)
    assert (m.n_vertices, m.n_triangles) == (4, 2)
    m = triangulate_grid(sq, 3, 3)
    assert (m.n_vertices, m.n_triangles) == (9, 8)


@pytest.mark.parametrize("domain", [
    [(0, 0), (1, 0), (0, 1)],
    [(-0.3, -0.2), (1.1, 0.1), (0.2, 0.9)],
    [(np.cos(a), np.sin(a)) for a in np.linspace(0, 2 * np.pi, 9)[:-1] + 0.1],
])
def test_clipped_triangulation_invariants(domain):
    m = triangulate_grid(domain, 9, 7)
    V, T = m.vertices, m.triangles
    a, b, c = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    assert np.all(cross > 0)
    assert 0.5 * cross.sum() == pytest.approx(polygon_area(m.domain), rel=1e-12)
    # each edge has at most two triangles and adjacency is symmetric
    adj = m.adjacency
    for t in range(m.n_triangles):
        for k in range(3):
            nb = adj[t, k]
            if nb >= 0:
                assert t in adj[nb]


def test_locate_tie_break_picks_lowest_index(mesh17):
    # a point on a shared edge belongs to two triangles
    p = mesh17.vertices[mesh17.triangles[0]][[0, 2]].mean(axis=0)
    t, lam = mesh17.locate(p)
    owners = [k for k in range(mesh17.n_triangles)
              if np.isin(mesh17.triangles[0][[0, 2]], mesh17.triangles[k]).all()]
    assert t == min(owners)
    assert lam.sum() == pytest.approx(1.0)


def test_locate_outside_raises(mesh17):
    with pytest.raises(DomainError, match="point outside domain"):
        mesh17.locate((1.5, 0.0))


def test_locate_many_agrees_with_locate(mesh17):
    pts = rng(1).uniform(-1, 1, (200, 2))
    pts[:20] = mesh17.vertices[:20]
    t, lam = mesh17.locate_many(pts)
    for i in range(len(pts)):
        ti, li = mesh17.locate(pts[i])
        assert t[i] == ti
        np.testing.assert_allclose(lam[i], li, atol=1e-15)


def test_affine_field_gradient(mesh17):
    f = sample(mesh17, lambda x, y: 3 * x + 4 * y)
    np.testing.assert_allclose(f.triangle_gradients, np.tile([3.0, 4.0], (mesh17.n_triangles, 1)),
                               atol=1e-12)
    assert lipschitz_constant(f) == pytest.approx(5.0)


def test_evaluation_examples(mesh17):
    assert evaluate(sample(mesh17, lambda x, y: x - y), (0.3, 0.1)) == pytest.approx(0.2)
    a = sample(mesh17, lambda x, y: np.abs(x))
    assert evaluate(a, (0.25, 0.5)) == pytest.approx(0.25)
    assert lipschitz_constant(a) == pytest.approx(1.0)


def test_evaluation_continuous_across_edges(mesh17):
    f = PLField(mesh17, rng(2).normal(size=mesh17.n_vertices))
    V, T = mesh17.vertices, mesh17.triangles
    adj = mesh17.adjacency
    r = rng(3)
    for t in r.choice(mesh17.n_triangles, 50, replace=False):
        for k in range(3):
            nb = adj[t, k]
            if nb < 0:
                continue
            u, v = T[t][(k + 1) % 3], T[t][(k + 2) % 3]
            s = r.uniform()
            p = (1 - s) * V[u] + s * V[v]
            vals = []
            for tri in (t, nb):
                a, b, c = V[T[tri]]
                M = np.array([b - a, c - a]).T
                l1, l2 = np.linalg.solve(M, p - a)
                vals.append(np.dot([1 - l1 - l2, l1, l2], f.values[T[tri]]))
            assert vals[0] == pytest.approx(vals[1], rel=1e-12, abs=1e-12)


def test_field_arithmetic(mesh17):
    f = PLField(mesh17, rng(4).normal(size=mesh17.n_vertices))
    assert np.all(add(f, negate(f)).values == 0)
    assert np.all(scale(f, 0).values == 0)
    np.testing.assert_allclose(add(scale(f, 2), negate(f)).values, f.values)


def test_incompatible_meshes(mesh17, square):
    other = triangulate_grid(square, 9, 9)
    with pytest.raises(MeshMismatchError, match="incompatible meshes"):
        add(PLField(mesh17, np.zeros(mesh17.n_vertices)), PLField(other, np.zeros(other.n_vertices)))


def test_lipschitz_subadditive(mesh17):
    r = rng(5)
    for _ in range(20):
        f = PLField(mesh17, r.normal(size=mesh17.n_vertices))
        g = PLField(mesh17, r.normal(size=mesh17.n_vertices))
        assert lipschitz_constant(add(f, g)) <= lipschitz_constant(f) + lipschitz_constant(g) + 1e-12


def test_restriction_of_x_on_square_boundary(mesh17, square):
    f = sample(mesh17, lambda x, y: x)
    r = restrict_to_curve(f, ClosedConvexCurve(square[[1, 2, 3, 0]]))
    # starts at (1, -1) going up: slopes 0, -1, 0, 1 by edge
    edges = np.unique(np.round(r.slopes, 12))
    assert set(edges) == {-1.0, 0.0, 1.0}
    first = [r.slopes[0]]
    for s in r.slopes[1:]:
        if s != first[-1]:
            first.append(s)
    assert first == [0.0, -1.0, 0.0, 1.0]


def test_restriction_breakpoints_include_all_crossings(mesh17):
    f = sample(mesh17, lambda x, y: np.abs(x))
    c = regular_polygon(7, 0.8, (0.05, -0.02), 0.3)
    r = restrict_to_curve(f, c)
    assert r.breakpoints[0] == 0 and r.breakpoints[-1] == pytest.approx(c.T_r)
    assert np.all(np.diff(r.breakpoints) > 1e-12 * c.T_r)
    # values at breakpoints agree with direct evaluation
    for t, v in zip(r.breakpoints, r.values):
        assert v == pytest.approx(evaluate(f, c(t)), abs=1e-12)


def test_restriction_outside_domain(mesh17):
    f = sample(mesh17, lambda x, y: x)
    with pytest.raises(DomainError, match="curve outside domain"):
        restrict_to_curve(f, regular_polygon(6, 1.5))
    with pytest.raises(DomainError, match="segment outside domain"):
        restrict_to_segment(f, (0, 0), (2, 0))


def test_segment_crossings_on_grid(mesh17):
    s = segment_crossings(mesh17, np.array([-1.0, 0.01]), np.array([1.0, 0.01]))
    # 16 vertical edges plus 16 diagonals crossed, plus both boundary edges
    assert len(np.unique(np.round(s, 12))) >= 33


def test_restriction_is_additive(mesh17):
    r = rng(6)
    c = regular_polygon(9, 0.7, (0.1, 0.1), 0.2)
    for _ in range(10):
        f = PLField(mesh17, r.normal(size=mesh17.n_vertices))
        g = PLField(mesh17, r.normal(size=mesh17.n_vertices))
        rf, rg, rs = (restrict_to_curve(x, c) for x in (f, g, add(f, g)))
        np.testing.assert_allclose(rs.breakpoints, rf.breakpoints)
        np.testing.assert_allclose(rs.values, rf.values + rg.values, atol=1e-9)
        np.testing.assert_allclose(rs.slopes, rf.slopes + rg.slopes, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_restriction_is_lipschitz(seed):
    mesh = triangulate_grid([(-1, -1), (1, -1), (1, 1), (-1, 1)], 9, 9)
    r = rng(7, seed)
    f = PLField(mesh, r.normal(size=mesh.n_vertices))
    c = regular_polygon(int(r.integers(3, 12)), r.uniform(0.2, 0.9), r.uniform(-0.05, 0.05, 2),
                        r.uniform(0, 6))
    L = lipschitz_constant(f)
    t = r.uniform(0, c.T_r, (20, 2))
    for t1, t2 in t:
        assert abs(evaluate(f, c(t1)) - evaluate(f, c(t2))) <= L * abs(t1 - t2) + 1e-9


def test_from_arrays_rejects_clockwise():
    with pytest.raises(DomainError):
        Triangulation.from_arrays([(0, 0), (1, 0), (0, 1)], [(0, 2, 1)])


def test_field_shape_and_finiteness(mesh17):
    with pytest.raises(MeshMismatchError):
        PLField(mesh17, np.zeros(3))
    with pytest.raises(DomainError):
        PLField(mesh17, np.full(mesh17.n_vertices, np.nan))
