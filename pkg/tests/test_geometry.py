import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dc_split.errors import DegenerateError, DomainError
from dc_split.geometry import (
    as_ccw_polygon,
    clip_convex_polygon,
    convex_hull_2d,
    evaluate_faces,
    lower_hull_3d,
    points_in_convex_polygon,
    polygon_area,
)
from dc_split.predicates import orient2d, orient3d

from conftest import rng


def test_orient2d_signs():
    assert orient2d((0, 0), (1, 0), (0, 1)) == 1
    assert orient2d((0, 0), (0, 1), (1, 0)) == -1
    assert orient2d((0, 0), (1, 1), (2, 2)) == 0


def test_orient2d_exact_on_near_collinear_input():
    # points on the line y = x that floats cannot all represent: the sign
    # must match exact rational evaluation of the stored doubles
    from fractions import Fraction
    r = rng(1)
    for _ in range(300):
        a = r.uniform(0, 1, 2)
        t = r.uniform(0, 1)
        b = a + 1e-3
        c = a + t * (b - a) + r.choice([-1, 0, 1]) * 1e-18
        F = [tuple(map(Fraction, p)) for p in (a, b, c)]
        det = (F[1][0] - F[0][0]) * (F[2][1] - F[0][1]) - (F[1][1] - F[0][1]) * (F[2][0] - F[0][0])
        assert orient2d(a, b, c) == (det > 0) - (det < 0)


def test_orient3d_above_plane():
    a, b, c = (0, 0, 0), (1, 0, 0), (0, 1, 0)
    assert orient3d(a, b, c, (0.2, 0.2, 1.0)) == 1
    assert orient3d(a, b, c, (0.2, 0.2, -1.0)) == -1
    assert orient3d(a, b, c, (5.0, -3.0, 0.0)) == 0


def test_hull_drops_interior_point():
    h = convex_hull_2d([(0, 0), (1, 0), (0, 1), (0.2, 0.2)])
    assert h.tolist() == [[0, 0], [1, 0], [0, 1]]


def test_hull_of_collinear_points_is_segment():
    assert convex_hull_2d([(0, 0), (1, 1), (2, 2)]).tolist() == [[0, 0], [2, 2]]


def test_hull_empty_input():
    with pytest.raises(DegenerateError, match="empty point set"):
        convex_hull_2d(np.zeros((0, 2)))


def _inside_triangle(p, a, b, c):
    return orient2d(a, b, p) >= 0 and orient2d(b, c, p) >= 0 and orient2d(c, a, p) >= 0 \
        if orient2d(a, b, c) > 0 else \
        orient2d(a, c, p) >= 0 and orient2d(c, b, p) >= 0 and orient2d(b, a, p) >= 0 \
        if orient2d(a, b, c) < 0 else False


def _brute_force_extreme(pts):
    # a point is extreme iff no triangle of the other points contains it
    out = set()
    for i, p in enumerate(pts):
        others = [q for j, q in enumerate(pts) if j != i]
        if not any(_inside_triangle(p, *t) for t in itertools.combinations(others, 3)):
            out.add(tuple(p))
    return out


def test_hull_matches_brute_force_extreme_points():
    pts = rng(2).uniform(0, 1, (50, 2))
    assert {tuple(p) for p in convex_hull_2d(pts)} == _brute_force_extreme(pts)


def test_hull_is_ccw_and_contains_inputs():
    pts = rng(3).normal(size=(200, 2))
    h = convex_hull_2d(pts)
    assert polygon_area(h) > 0
    assert points_in_convex_polygon(h, pts, 1e-12).all()


def _triple_envelope(pts, xy):
    """Lower envelope by enumeration: max over planes through triples lying below every point."""
    best = np.full(len(xy), -np.inf)
    for i, j, k in itertools.combinations(range(len(pts)), 3):
        m = np.array([pts[j, :2] - pts[i, :2], pts[k, :2] - pts[i, :2]])
        if abs(np.linalg.det(m)) < 1e-12:
            continue
        g = np.linalg.solve(m, [pts[j, 2] - pts[i, 2], pts[k, 2] - pts[i, 2]])
        c = pts[i, 2] - g @ pts[i, :2]
        if np.all(pts[:, :2] @ g + c <= pts[:, 2] + 1e-12):
            best = np.maximum(best, xy @ g + c)
    return best


def test_lower_hull_matches_triple_enumeration():
    for trial in range(20):
        pts = rng(4, trial).uniform(-1, 1, (12, 3))
        faces = lower_hull_3d(pts)
        np.testing.assert_allclose(evaluate_faces(faces, pts[:, :2]),
                                   _triple_envelope(pts, pts[:, :2]), atol=1e-9)


def test_lower_hull_faces_tile_projection_hull():
    pts = rng(5).uniform(-1, 1, (300, 3))
    faces = lower_hull_3d(pts)
    area = sum(polygon_area(f.projected_triangle) for f in faces)
    assert area == pytest.approx(polygon_area(convex_hull_2d(pts[:, :2])), rel=1e-12)
    assert all(polygon_area(f.projected_triangle) > 0 for f in faces)


def test_lower_hull_planes_support_all_points():
    pts = rng(6).uniform(-1, 1, (300, 3))
    for f in lower_hull_3d(pts):
        assert np.all(f(pts[:, :2]) <= pts[:, 2] + 1e-9)


def test_lower_hull_on_coplanar_grid():
    g = np.linspace(-1, 1, 9)
    X, Y = np.meshgrid(g, g)
    pts = np.column_stack([X.ravel(), Y.ravel(), 2 * X.ravel() - Y.ravel() + 3])
    faces = lower_hull_3d(pts)
    np.testing.assert_allclose(evaluate_faces(faces, pts[:, :2]), pts[:, 2], atol=1e-12)


def test_lower_hull_keeps_lowest_duplicate():
    pts = [(0, 0, 5), (0, 0, 1), (1, 0, 0), (0, 1, 0)]
    faces = lower_hull_3d(pts)
    assert evaluate_faces(faces, [(0, 0)])[0] == pytest.approx(1.0)


def test_lower_hull_collinear_projection_is_degenerate():
    with pytest.raises(DegenerateError, match="degenerate domain"):
        lower_hull_3d([(0, 0, 1), (1, 1, 2), (2, 2, 0)])


def test_exact_fallback_path_agrees_with_fast_path():
    # degenerate lifted grid: many exact ties exercise the authored hull
    g = np.linspace(0, 1, 6)
    X, Y = np.meshgrid(g, g)
    pts = np.column_stack([X.ravel(), Y.ravel(), np.abs(X.ravel() - 0.4)])
    from dc_split.geometry import _LowerHull
    from dc_split.geometry import _planes
    hull = _LowerHull(pts, np.random.default_rng(0).permutation(len(pts)))
    tris = np.array(list(hull.lower_faces()))
    grads, offs = _planes(pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]])
    exact = np.max(pts[:, :2] @ grads.T + offs, axis=1)
    np.testing.assert_allclose(exact, evaluate_faces(lower_hull_3d(pts), pts[:, :2]), atol=1e-12)
    np.testing.assert_allclose(exact, np.abs(X.ravel() - 0.4), atol=1e-12)


def test_as_ccw_polygon_rejects_nonconvex():
    with pytest.raises(DomainError, match="domain must be convex"):
        as_ccw_polygon([(0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)])


def test_as_ccw_polygon_reverses_cw_input():
    assert polygon_area(as_ccw_polygon([(0, 0), (0, 1), (1, 1), (1, 0)])) == pytest.approx(1.0)


def test_clip_square_by_triangle():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    tri = [(0, 0), (2, 0), (0, 2)]
    assert polygon_area(clip_convex_polygon(sq, tri)) == pytest.approx(1.0)
    out = clip_convex_polygon(sq, [(-1, -1), (2, -1), (-1, 2)])
    assert polygon_area(out) == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 40))
def test_lower_hull_envelope_below_points(seed, n):
    pts = rng(7, seed).uniform(-1, 1, (n, 3))
    vals = evaluate_faces(lower_hull_3d(pts), pts[:, :2])
    assert np.all(vals <= pts[:, 2] + 1e-9)
    # hull vertices of the projection lie on the envelope
    hull = convex_hull_2d(pts[:, :2])
    idx = [int(np.flatnonzero((pts[:, :2] == h).all(axis=1))[0]) for h in hull]
    np.testing.assert_allclose(vals[idx], pts[idx, 2], atol=1e-9)
