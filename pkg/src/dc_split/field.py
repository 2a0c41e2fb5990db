"""Piecewise-linear scalar fields on a triangulation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Callable

import numpy as np

from .errors import DomainError, MeshMismatchError
from .geometry import points_in_convex_polygon
from .mesh import Triangulation

if TYPE_CHECKING:
    from .curves import ClosedConvexCurve

__all__ = [
    "PLField",
    "GradientSample",
    "CurveRestriction",
    "evaluate",
    "gradients",
    "lipschitz_constant",
    "restrict_to_curve",
    "segment_crossings",
    "add",
    "scale",
    "negate",
    "sample",
    "tol_num",
]


def tol_num(values) -> float:
    """Function-value tolerance ``1e-8 * (1 + max |value|)``."""
    v = np.asarray(values, dtype=float)
    return 1e-8 * (1.0 + (float(np.max(np.abs(v))) if v.size else 0.0))


@dataclass(frozen=True, eq=False)
class PLField:
    mesh: Triangulation
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_vertices,):
            raise MeshMismatchError(
                f"values has shape {v.shape}, mesh has {self.mesh.n_vertices} vertices")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @cached_property
    def triangle_gradients(self) -> np.ndarray:
        inv, _ = self.mesh.gradient_operator
        t = self.mesh.triangles
        f = self.values
        d = np.column_stack([f[t[:, 1]] - f[t[:, 0]], f[t[:, 2]] - f[t[:, 0]]])
        g = np.einsum("tij,tj->ti", inv, d)
        g.setflags(write=False)
        return g

    def __call__(self, p) -> float:
        return evaluate(self, p)


@dataclass(frozen=True)
class GradientSample:
    triangle_index: int
    gradient: tuple[float, float]


@dataclass(frozen=True, eq=False)
class CurveRestriction:
    """``Phi(t) = f(r(t))`` sampled at its breakpoints.

    ``slopes[i]`` is the directional derivative on ``[t_i, t_{i+1}]`` and
    ``directions[i]`` the unit planar tangent there.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    directions: np.ndarray

    @property
    def length(self) -> float:
        return float(self.breakpoints[-1])


def sample(mesh: Triangulation, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> PLField:
    """Nodal interpolant of ``fn(x, y)`` on ``mesh``."""
    V = mesh.vertices
    return PLField(mesh, np.asarray(fn(V[:, 0], V[:, 1]), dtype=float))


def evaluate(field: PLField, p) -> float:
    """Barycentric value of the field at ``p`` (raises outside the domain)."""
    t, lam = field.mesh.locate(p)
    return float(np.dot(lam, field.values[field.mesh.triangles[t]]))


def evaluate_many(field: PLField, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return np.array([evaluate(field, p) for p in pts])


def gradients(field: PLField) -> list[GradientSample]:
    g = field.triangle_gradients
    return [GradientSample(k, (float(a), float(b))) for k, (a, b) in enumerate(g)]


def lipschitz_constant(field: PLField) -> float:
    """Largest per-triangle gradient norm."""
    g = field.triangle_gradients
    return float(np.max(np.hypot(g[:, 0], g[:, 1]))) if len(g) else 0.0


def _check_same_mesh(a: PLField, b: PLField):
    if a.mesh is not b.mesh:
        same = (a.mesh.vertices.shape == b.mesh.vertices.shape
                and a.mesh.triangles.shape == b.mesh.triangles.shape
                and np.array_equal(a.mesh.vertices, b.mesh.vertices)
                and np.array_equal(a.mesh.triangles, b.mesh.triangles))
        if not same:
            raise MeshMismatchError("incompatible meshes")


def add(a: PLField, b: PLField) -> PLField:
    _check_same_mesh(a, b)
    return PLField(a.mesh, a.values + b.values)


def scale(a: PLField, lam: float) -> PLField:
    return PLField(a.mesh, a.values * float(lam))


def negate(a: PLField) -> PLField:
    return PLField(a.mesh, -a.values)


def segment_crossings(mesh: Triangulation, p, q) -> np.ndarray:
    """Parameters ``s`` in ``[0, 1]`` where segment ``pq`` meets mesh edges.

    Edges parallel to the segment are ignored; their endpoints are found
    through the transversal edges incident to them.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    tris = mesh.triangles_near_segment(p, q)
    if len(tris) == 0:
        return np.zeros(0)
    t = mesh.triangles[tris]
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    e = np.unique(e, axis=0)
    a = mesh.vertices[e[:, 0]]
    b = mesh.vertices[e[:, 1]]
    d = q - p
    w = b - a
    den = d[0] * w[:, 1] - d[1] * w[:, 0]
    scale_ = np.hypot(*d) * np.hypot(w[:, 0], w[:, 1])
    ok = np.abs(den) > 1e-14 * scale_
    ap = a - p
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (ap[:, 0] * w[:, 1] - ap[:, 1] * w[:, 0]) / den
        u = (ap[:, 0] * d[1] - ap[:, 1] * d[0]) / den
    eps = 1e-12
    ok &= (s >= -eps) & (s <= 1 + eps) & (u >= -eps) & (u <= 1 + eps)
    return np.clip(s[ok], 0.0, 1.0)


def _polyline_breakpoints(mesh: Triangulation, verts: np.ndarray):
    n = len(verts)
    seg_len = np.hypot(*(np.roll(verts, -1, axis=0) - verts).T)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = float(cum[-1])
    ts, seg_of = [], []
    for i in range(n):
        s = segment_crossings(mesh, verts[i], verts[(i + 1) % n])
        s = np.unique(np.concatenate([[0.0, 1.0], s]))
        ts.append(cum[i] + s * seg_len[i])
        seg_of.append(np.full(len(s), i))
    t = np.concatenate(ts)
    order = np.argsort(t, kind="stable")
    t = t[order]
    keep = np.concatenate([[True], np.diff(t) > 1e-12 * total])
    t = t[keep]
    t[-1] = total
    return t, cum, seg_len


def restrict_to_curve(field: PLField, curve: "ClosedConvexCurve") -> CurveRestriction:
    """Restriction of the field to a closed polygonal curve, by arc length.

    Breakpoints are the curve vertices plus every crossing with a mesh
    edge, starting at the first curve vertex.
    """
    verts = np.asarray(curve.vertices, dtype=float)
    mesh = field.mesh
    if not points_in_convex_polygon(mesh.domain, verts, mesh.tol).all():
        raise DomainError("curve outside domain")
    t, cum, seg_len = _polyline_breakpoints(mesh, verts)
    n = len(verts)
    mids = 0.5 * (t[1:] + t[:-1])
    seg = np.minimum(np.searchsorted(cum, mids, side="right") - 1, n - 1)
    e = verts[(seg + 1) % n] - verts[seg]
    dirs = e / np.hypot(e[:, 0], e[:, 1])[:, None]
    mid_pts = verts[seg] + ((mids - cum[seg]) / seg_len[seg])[:, None] * e
    tri, _ = mesh.locate_many(mid_pts)
    slopes = np.einsum("ij,ij->i", field.triangle_gradients[tri], dirs)
    # each breakpoint lies on the closed triangle of the piece that follows it
    seg_b = np.append(seg, seg[-1])
    tri_b = np.append(tri, tri[-1])
    e_b = verts[(seg_b + 1) % n] - verts[seg_b]
    pts = verts[seg_b] + ((t - cum[seg_b]) / seg_len[seg_b])[:, None] * e_b
    values = _barycentric_values(field, tri_b, pts)
    return CurveRestriction(t, values, slopes, dirs)


def _barycentric_values(field: PLField, tri: np.ndarray, pts: np.ndarray) -> np.ndarray:
    V = field.mesh.vertices
    T = field.mesh.triangles[tri]
    a, b, c = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]

    def cr(u, w):
        return (w[:, 0] - u[:, 0]) * (pts[:, 1] - u[:, 1]) - (w[:, 1] - u[:, 1]) * (pts[:, 0] - u[:, 0])

    lam = np.stack([cr(b, c), cr(c, a), cr(a, b)], axis=1)
    lam /= lam.sum(axis=1, keepdims=True)
    return np.einsum("ij,ij->i", lam, field.values[T])


def restrict_to_segment(field: PLField, p0, p1) -> tuple[np.ndarray, np.ndarray]:
    """Arc-length knots and field values along the open segment ``p0 p1``."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    mesh = field.mesh
    if not points_in_convex_polygon(mesh.domain, np.array([p0, p1]), mesh.tol).all():
        raise DomainError("segment outside domain")
    length = float(np.hypot(*(p1 - p0)))
    s = np.unique(np.concatenate([[0.0, 1.0], segment_crossings(mesh, p0, p1)]))
    s = s[np.concatenate([[True], np.diff(s) > 1e-12])]
    s[-1] = 1.0
    vals = np.array([evaluate(field, p0 + si * (p1 - p0)) for si in s])
    return s * length, vals
