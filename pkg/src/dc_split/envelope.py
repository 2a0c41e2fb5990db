"""Convex minorants of PL fields and their extension by supporting planes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvexityError, DegenerateError
from .field import PLField, evaluate, segment_crossings, tol_num
from .geometry import (
    LowerHullFace,
    as_ccw_polygon,
    convex_hull_2d,
    evaluate_faces,
    lower_hull_3d,
    points_in_convex_polygon,
)

__all__ = [
    "ConvexPLFunction",
    "ConvexityReport",
    "region_samples",
    "convex_minorant",
    "check_convexity",
    "convex_extension",
    "split_finite_convex",
]


@dataclass(frozen=True, eq=False)
class ConvexPLFunction:
    """A convex PL function given by its lower-hull faces over ``domain``.

    ``as_field`` holds the max over face planes at every node of the master
    mesh, including nodes outside ``domain``.
    """

    faces: tuple[LowerHullFace, ...]
    domain: np.ndarray
    as_field: PLField

    def __call__(self, xy) -> np.ndarray:
        return evaluate_faces(self.faces, xy)

    @property
    def planes(self) -> np.ndarray:
        """``(k, 3)`` array of ``(gx, gy, offset)`` rows."""
        return np.array([(*f.gradient, f.offset) for f in self.faces])


@dataclass(frozen=True)
class ConvexityReport:
    is_convex: bool
    worst_violation: float
    witness: tuple[str, object] | None


def _region(region, field: PLField) -> np.ndarray:
    if region is None:
        return field.mesh.domain
    poly = np.asarray(region, dtype=float)
    hull = convex_hull_2d(poly)
    if len(hull) < 3:
        raise DegenerateError("degenerate region")
    return hull


def region_samples(field: PLField, region=None):
    """Vertices of the mesh arrangement clipped to ``region``.

    Returns ``(node_ids, extra_points, extra_values)``: master-mesh nodes
    inside ``region`` plus the region corners and region-edge/mesh-edge
    crossings, valued by PL evaluation.
    """
    return _samples(field, _region(region, field))


def _samples(field: PLField, poly: np.ndarray):
    mesh = field.mesh
    tol = mesh.tol
    nodes = np.flatnonzero(points_in_convex_polygon(poly, mesh.vertices, tol))
    extra = [poly]
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        s = segment_crossings(mesh, p, q)
        if len(s):
            extra.append(p + s[:, None] * (q - p))
    extra = np.unique(np.concatenate(extra), axis=0)
    # drop extras that coincide with a mesh node already included
    if len(nodes):
        V = mesh.vertices[nodes]
        d = np.min(np.abs(extra[:, None, :] - V[None, :, :]).max(axis=2), axis=1)
        extra = extra[d > tol]
    vals = np.array([evaluate(field, p) for p in extra]) if len(extra) else np.zeros(0)
    return nodes, extra, vals


def convex_minorant(field: PLField, region=None) -> ConvexPLFunction:
    """Largest convex function below the field on a convex ``region``.

    ``region`` defaults to the mesh domain. The minorant is the lower
    convex hull of the field lifted at every vertex of the mesh clipped to
    the region, which is exact for PL data.
    """
    poly = _region(region, field)
    nodes, extra, vals = _samples(field, poly)
    V = field.mesh.vertices
    pts = np.concatenate([
        np.column_stack([V[nodes], field.values[nodes]]),
        np.column_stack([extra, vals]) if len(extra) else np.zeros((0, 3)),
    ])
    try:
        faces = lower_hull_3d(pts)
    except DegenerateError as exc:
        raise DegenerateError("degenerate region") from exc
    fvals = evaluate_faces(faces, V)
    return ConvexPLFunction(tuple(faces), poly, PLField(field.mesh, fvals))


def check_convexity(field: PLField, region=None) -> ConvexityReport:
    """Whether the field's data on ``region`` extends to a convex function.

    Two deficits are measured: the field minus its convex minorant at every
    sample of the region, and the midpoint deficit ``f(m) - interp(a, b)``
    over straight chains ``a - m - b`` of mesh edges inside the region.
    """
    poly = _region(region, field)
    g = convex_minorant(field, poly)
    nodes, extra, vals = _samples(field, poly)
    worst, witness = 0.0, None
    if len(nodes):
        dn = field.values[nodes] - g.as_field.values[nodes]
        k = int(np.argmax(dn))
        if dn[k] > worst:
            worst, witness = float(dn[k]), ("vertex", int(nodes[k]))
    if len(extra):
        de = vals - g(extra)
        k = int(np.argmax(de))
        if de[k] > worst:
            worst, witness = float(de[k]), ("point", tuple(map(float, extra[k])))
    ch = field.mesh.straight_chains
    if len(ch) and len(nodes):
        a, m, b = (ch[:, c].astype(np.int64) for c in range(3))
        w = ch[:, 3]
        mask = np.zeros(field.mesh.n_vertices, dtype=bool)
        mask[nodes] = True
        sel = mask[a] & mask[m] & mask[b]
        f = field.values
        dc = f[m] - ((1.0 - w) * f[a] + w * f[b])
        dc = np.where(sel, dc, -np.inf)
        k = int(np.argmax(dc))
        if dc[k] > worst:
            worst, witness = float(dc[k]), ("edge", (int(a[k]), int(b[k])))
    tol = tol_num(field.values)
    return ConvexityReport(worst <= tol, worst, witness)


def convex_extension(fn: ConvexPLFunction, target_domain=None) -> ConvexPLFunction:
    """Extend a convex PL function as the max of its face planes.

    Face planes are the finite subdifferential representation, so the
    max over them is the supporting-plane extension to ``target_domain``.
    """
    target = fn.as_field.mesh.domain if target_domain is None else as_ccw_polygon(target_domain)
    return ConvexPLFunction(fn.faces, target, fn.as_field)


def split_finite_convex(fn_finite) -> tuple[ConvexPLFunction, ConvexPLFunction]:
    """Write a finite function that is convex on its hull as ``f_tilde - f_bar``.

    ``f_tilde`` extends the function from its support hull by supporting
    planes, and ``f_bar = f_tilde - fn`` vanishes on the hull.
    """
    field = fn_finite.field
    hull = fn_finite.support_hull
    report = check_convexity(field, hull)
    if not report.is_convex:
        raise ConvexityError("not convex on support")
    m = convex_minorant(field, hull)
    f_tilde = convex_extension(m)
    bar = PLField(field.mesh, f_tilde.as_field.values - field.values)
    f_bar = convex_minorant(bar)
    f_bar = ConvexPLFunction(f_bar.faces, f_bar.domain, bar)
    return f_tilde, f_bar
