"""Planar and lifted geometric primitives.

Points are handled as float arrays: shape ``(n, 2)`` for planar points and
``(n, 3)`` for lifted points ``(x, y, value)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateError, DomainError
from .predicates import orient2d, orient2d_many, orient2d_rows, orient3d_many, orient3d_rows

__all__ = [
    "LowerHullFace",
    "convex_hull_2d",
    "lower_hull_3d",
    "tol_geom",
    "polygon_area",
    "is_convex_polygon",
    "as_ccw_polygon",
    "points_in_convex_polygon",
    "clip_convex_polygon",
    "merge_coplanar_faces",
    "evaluate_faces",
]

INF = -1  # vertex index of the symbolic point at vertical infinity


def tol_geom(*arrays) -> float:
    """Scale-aware geometric tolerance ``1e-9 * (1 + max |coordinate|)``."""
    m = 0.0
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if a.size:
            m = max(m, float(np.max(np.abs(a))))
    return 1e-9 * (1.0 + m)


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, dim)
    pts = pts.reshape(-1, dim)
    if not np.all(np.isfinite(pts)):
        raise DomainError("coordinates must be finite")
    return pts


def convex_hull_2d(points) -> np.ndarray:
    """Extreme points of a planar point set in counterclockwise order.

    Collinear boundary points are dropped. The hull starts at the
    lexicographically smallest point; a collinear input yields its two
    endpoints and a single distinct point yields itself.
    """
    pts = _as_points(points, 2)
    if len(pts) == 0:
        raise DegenerateError("empty point set")
    uniq = np.unique(pts, axis=0)  # lexicographic sort by (x, y)
    if len(uniq) <= 2:
        return uniq
    # only the lowest and highest point of each vertical line can be extreme
    first = np.r_[True, uniq[1:, 0] != uniq[:-1, 0]]
    last = np.r_[uniq[1:, 0] != uniq[:-1, 0], True]
    uniq = uniq[first | last]

    def chain(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2 and orient2d(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = chain(uniq)
    upper = chain(uniq[::-1])
    hull = lower[:-1] + upper[:-1]
    return np.array(hull)


def polygon_area(poly) -> float:
    """Signed area (positive for counterclockwise vertex order)."""
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def is_convex_polygon(poly) -> bool:
    p = np.asarray(poly, dtype=float)
    n = len(p)
    if n < 3:
        return False
    signs = {orient2d(p[i], p[(i + 1) % n], p[(i + 2) % n]) for i in range(n)}
    signs.discard(0)
    if len(signs) != 1:
        return False
    # reject self-overlapping "stars": total turning must be one revolution
    e = np.roll(p, -1, axis=0) - p
    f = np.roll(e, -1, axis=0)
    ang = np.arctan2(e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0], np.einsum("ij,ij->i", e, f))
    return abs(abs(ang.sum()) - 2 * np.pi) < 1e-6


def as_ccw_polygon(poly) -> np.ndarray:
    """Validate a convex polygon and return its strict vertices CCW."""
    p = _as_points(poly, 2)
    if len(p) >= 2 and np.all(p[0] == p[-1]):
        p = p[:-1]
    if len(p) < 3 or not is_convex_polygon(p):
        raise DomainError("domain must be convex")
    return convex_hull_2d(p)


def points_in_convex_polygon(poly, pts, tol: float = 0.0) -> np.ndarray:
    """Boolean mask of points inside a CCW convex polygon, closed up to ``tol``."""
    poly = np.asarray(poly, dtype=float)
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    inside = np.ones(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        e = b - a
        ln = float(np.hypot(*e))
        cross = e[0] * (pts[:, 1] - a[1]) - e[1] * (pts[:, 0] - a[0])
        inside &= cross >= -tol * ln
    return inside


def clip_convex_polygon(subject, clip) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex ``subject`` by a CCW convex ``clip``."""
    out = [np.asarray(p, dtype=float) for p in subject]
    clip = np.asarray(clip, dtype=float)
    n = len(clip)
    for i in range(n):
        if not out:
            break
        a, b = clip[i], clip[(i + 1) % n]
        inp, out = out, []
        for j in range(len(inp)):
            p, q = inp[j], inp[(j + 1) % len(inp)]
            sp, sq = orient2d(a, b, p), orient2d(a, b, q)
            if sp >= 0:
                out.append(p)
            if sp * sq < 0:
                out.append(_line_intersection(p, q, a, b))
    return np.array(out).reshape(-1, 2)


def _line_intersection(p, q, a, b) -> np.ndarray:
    # canonical endpoint order so shared edges give identical points
    if (p[0], p[1]) > (q[0], q[1]):
        p, q = q, p
    d = q - p
    e = b - a
    den = d[0] * e[1] - d[1] * e[0]
    t = ((a[0] - p[0]) * e[1] - (a[1] - p[1]) * e[0]) / den
    t = min(max(t, 0.0), 1.0)
    return p + t * d


# ---------------------------------------------------------------------------
# lower convex hull of lifted points


@dataclass(frozen=True)
class LowerHullFace:
    """One face ``z = <gradient, (x, y)> + offset`` of a lower convex hull."""

    gradient: tuple[float, float]
    offset: float
    vertex_indices: tuple[int, int, int]
    projected_triangle: tuple[tuple[float, float], ...]

    def __call__(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return xy[..., 0] * self.gradient[0] + xy[..., 1] * self.gradient[1] + self.offset


def _planes(p0, p1, p2) -> tuple[np.ndarray, np.ndarray]:
    """Gradients and offsets of the planes through row-wise point triples."""
    m = np.stack([p1[:, :2] - p0[:, :2], p2[:, :2] - p0[:, :2]], axis=1)
    rhs = np.stack([p1[:, 2] - p0[:, 2], p2[:, 2] - p0[:, 2]], axis=1)
    g = np.linalg.solve(m, rhs[..., None])[..., 0] if len(m) else np.zeros((0, 2))
    # offset anchored at the centroid to limit cancellation
    c = (p0 + p1 + p2) / 3.0
    return g, c[:, 2] - g[:, 0] * c[:, 0] - g[:, 1] * c[:, 1]


class _LowerHull:
    """Incremental hull of ``P + {vertical infinity}`` with a conflict graph.

    Faces are vertex triples oriented CCW in projection (inward normal up);
    faces through infinity are stored as ``(u, v, INF)``. A point is outside
    a face when its exact orientation against it is strictly negative, so
    coplanar points never create faces.
    """

    def __init__(self, pts: np.ndarray, order: np.ndarray):
        self.pts = pts
        self.faces: dict[int, tuple[int, int, int]] = {}
        self.edge: dict[tuple[int, int], int] = {}
        self.conf_f: dict[int, set[int]] = {}
        self.conf_p: dict[int, set[int]] = {}
        self._next = 0
        self._build(order)

    def _visible_batch(self, faces, cands) -> list[np.ndarray]:
        """Visible candidates of each face, with one predicate call per kind."""
        P = self.pts
        out: list[np.ndarray] = [np.zeros(0, np.int64)] * len(faces)
        for vertical in (False, True):
            sel = [k for k, f in enumerate(faces) if (f[2] == INF) == vertical and len(cands[k])]
            if not sel:
                continue
            idx = np.concatenate([cands[k] for k in sel])
            owner = np.repeat(np.arange(len(sel)), [len(cands[k]) for k in sel])
            tri = np.array([faces[k] for k in sel])[owner]
            if vertical:
                hit = orient2d_rows(P[tri[:, 0], :2], P[tri[:, 1], :2], P[idx, :2]) > 0
            else:
                hit = orient3d_rows(P[tri[:, 0]], P[tri[:, 1]], P[tri[:, 2]], P[idx]) < 0
            bounds = np.cumsum([0] + [len(cands[k]) for k in sel])
            for j, k in enumerate(sel):
                lo, hi = bounds[j], bounds[j + 1]
                out[k] = idx[lo:hi][hit[lo:hi]]
        return out

    def _add_faces(self, faces, candidates):
        cands = []
        for c in candidates:
            a = np.fromiter(c, dtype=np.int64, count=len(c))
            a.sort()
            cands.append(a)
        hits = self._visible_batch(faces, cands)
        for face, h in zip(faces, hits):
            fid = self._next
            self._next += 1
            self.faces[fid] = face
            for k in range(3):
                self.edge[(face[k], face[(k + 1) % 3])] = fid
            s = set(h.tolist())
            self.conf_f[fid] = s
            for i in s:
                self.conf_p[i].add(fid)

    def _remove_face(self, fid):
        face = self.faces.pop(fid)
        for k in range(3):
            e = (face[k], face[(k + 1) % 3])
            if self.edge.get(e) == fid:
                del self.edge[e]
        for i in self.conf_f.pop(fid):
            self.conf_p[i].discard(fid)

    def _build(self, order):
        P = self.pts
        a = int(order[0])
        b = next(int(i) for i in order[1:] if np.any(P[i, :2] != P[a, :2]))
        c = None
        for i in order:
            i = int(i)
            s = orient2d(P[a], P[b], P[i])
            if s != 0:
                c = i
                if s < 0:
                    a, b = b, a
                break
        if c is None:
            raise DegenerateError("degenerate domain")
        rest = [int(i) for i in order if int(i) not in (a, b, c)]
        for i in rest:
            self.conf_p[i] = set()
        init = [(a, b, c), (b, a, INF), (c, b, INF), (a, c, INF)]
        self._add_faces(init, [rest] * 4)
        for p in rest:
            if self.conf_p[p]:
                self._insert(p)
            del self.conf_p[p]

    def _insert(self, p: int):
        # the conflict graph is complete, so it lists every visible face
        visible = set(self.conf_p[p])
        faces, cands = [], []
        for fid in sorted(visible):
            face = self.faces[fid]
            for k in range(3):
                u, v = face[k], face[(k + 1) % 3]
                nb = self.edge[(v, u)]
                if nb not in visible:
                    cands.append((self.conf_f[fid] | self.conf_f[nb]) - {p})
                    if u == INF:
                        faces.append((v, p, INF))
                    elif v == INF:
                        faces.append((p, u, INF))
                    else:
                        faces.append((u, v, p))
        for fid in visible:
            self._remove_face(fid)
        self._add_faces(faces, cands)

    def lower_faces(self):
        P = self.pts
        for fid in sorted(self.faces):
            u, v, w = self.faces[fid]
            if w == INF:
                continue
            if orient2d(P[u], P[v], P[w]) <= 0:
                continue  # vertical sliver of a coplanar split
            yield u, v, w


def _qhull_lower(pts: np.ndarray):
    """Lower faces from qhull, or ``None`` unless they certify as the lower hull.

    The certificate asks every face plane to support all points within
    ``tol_geom`` and the projected faces to cover the planar hull area.
    """
    try:
        hull = ConvexHull(pts, qhull_options="Qt")
    except QhullError:
        return None
    tris = hull.simplices[hull.equations[:, 2] < 0]
    if not len(tris):
        return None
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    scale = max(float(np.ptp(pts[:, 0])), float(np.ptp(pts[:, 1]))) ** 2
    keep = np.abs(area2) > 1e-14 * scale
    tris, area2 = tris[keep], area2[keep]
    flip = area2 < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    order = np.lexsort(tris.T[::-1])
    tris = tris[order]
    grads, offs = _planes(pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]])
    tol = tol_geom(pts)
    below = pts[:, :2] @ grads.T + offs - pts[:, 2:3]
    if below.max() > tol:
        return None
    try:
        hull_area = float(ConvexHull(pts[:, :2]).volume)
    except QhullError:
        return None
    if abs(0.5 * float(np.abs(area2).sum()) - hull_area) > tol * max(1.0, hull_area):
        return None
    return tris, grads, offs


def lower_hull_3d(points, seed: int = 0) -> list[LowerHullFace]:
    """Faces of the lower convex hull of lifted points ``(x, y, z)``.

    Points sharing a projection keep only their lowest lift. Coplanar
    regions are returned as several triangles and points lying on the hull
    surface without being extreme are not used as face vertices. The
    insertion order is a seeded permutation, so the output is deterministic.
    """
    pts = _as_points(points, 3)
    if len(pts) < 3:
        raise DegenerateError("degenerate domain")
    # keep the lowest point per projection, remembering original indices
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    xy = pts[order, :2]
    keep = order[np.r_[True, np.any(xy[1:] != xy[:-1], axis=1)]]
    sub = pts[keep]
    if len(sub) < 3:
        raise DegenerateError("degenerate domain")
    found = _qhull_lower(sub)
    if found is None:
        perm = np.random.default_rng(seed).permutation(len(sub))
        tris = np.array(list(_LowerHull(sub, perm).lower_faces()), dtype=np.int64).reshape(-1, 3)
        grads, offs = _planes(sub[tris[:, 0]], sub[tris[:, 1]], sub[tris[:, 2]])
    else:
        tris, grads, offs = found
    faces = []
    corners = sub[tris][:, :, :2].tolist()
    for ids, g, off, tri in zip(keep[tris].tolist(), grads.tolist(), offs.tolist(), corners):
        faces.append(LowerHullFace(tuple(g), off, tuple(ids), tuple(map(tuple, tri))))
    return faces


def merge_coplanar_faces(faces: list[LowerHullFace], tol: float = 1e-9) -> list[list[int]]:
    """Group face indices whose planes coincide within ``tol`` (reporting only)."""
    groups: list[list[int]] = []
    keys: list[tuple[float, float, float]] = []
    for i, f in enumerate(faces):
        k = (f.gradient[0], f.gradient[1], f.offset)
        for gi, kk in enumerate(keys):
            if max(abs(k[0] - kk[0]), abs(k[1] - kk[1]), abs(k[2] - kk[2])) <= tol:
                groups[gi].append(i)
                break
        else:
            keys.append(k)
            groups.append([i])
    return groups


def evaluate_faces(faces: list[LowerHullFace], xy) -> np.ndarray:
    """Max over face planes at the given points (the convex PL function)."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    g = np.array([f.gradient for f in faces])
    c = np.array([f.offset for f in faces])
    return np.max(xy @ g.T + c, axis=1)
