"""Triangulations of gridded convex polygons and point location on them."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError
from .geometry import (
    as_ccw_polygon,
    clip_convex_polygon,
    convex_hull_2d,
    points_in_convex_polygon,
    polygon_area,
    tol_geom,
)
from .predicates import orient2d

__all__ = ["Triangulation", "triangulate_grid"]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Triangulation:
    """A conforming triangle mesh of a convex polygon.

    ``triangles`` are CCW vertex-index triples. ``adjacency[t, k]`` is the
    triangle across the edge opposite vertex ``k`` of triangle ``t`` (-1 on
    the boundary).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    domain: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _freeze(np.asarray(self.vertices, dtype=float)))
        object.__setattr__(self, "triangles", _freeze(np.asarray(self.triangles, dtype=np.int64)))
        object.__setattr__(self, "domain", _freeze(np.asarray(self.domain, dtype=float)))

    @classmethod
    def from_arrays(cls, vertices, triangles) -> "Triangulation":
        """Build a mesh from explicit arrays; the domain is the vertex hull."""
        v = np.asarray(vertices, dtype=float)
        t = np.asarray(triangles, dtype=np.int64)
        for k, tri in enumerate(t):
            if orient2d(v[tri[0]], v[tri[1]], v[tri[2]]) <= 0:
                raise DomainError(f"triangle {k} is not positively oriented")
        return cls(v, t, convex_hull_2d(v))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def tol(self) -> float:
        return tol_geom(self.vertices)

    @cached_property
    def adjacency(self) -> np.ndarray:
        owner: dict[tuple[int, int], tuple[int, int]] = {}
        adj = -np.ones((self.n_triangles, 3), dtype=np.int64)
        for t, tri in enumerate(self.triangles.tolist()):
            for k in range(3):
                u, v = tri[(k + 1) % 3], tri[(k + 2) % 3]
                other = owner.pop((v, u), None)
                if other is None:
                    owner[(u, v)] = (t, k)
                else:
                    adj[t, k] = other[0]
                    adj[other[0], other[1]] = t
        return _freeze(adj)

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return _freeze(np.unique(e, axis=0))

    @cached_property
    def gradient_operator(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-triangle matrices turning vertex values into gradients."""
        v = self.vertices[self.triangles]
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        # grad = inv([e1; e2]) @ [f1 - f0, f2 - f0]
        inv = np.empty((len(v), 2, 2))
        inv[:, 0, 0] = e2[:, 1] / det
        inv[:, 0, 1] = -e1[:, 1] / det
        inv[:, 1, 0] = -e2[:, 0] / det
        inv[:, 1, 1] = e1[:, 0] / det
        return _freeze(inv), _freeze(det / 2.0)

    @cached_property
    def areas(self) -> np.ndarray:
        return self.gradient_operator[1]

    @cached_property
    def straight_chains(self) -> np.ndarray:
        """Rows ``(a, m, b, w)``: ``m`` lies on segment ``ab`` of two mesh
        edges, with ``w = |am| / |ab|``."""
        nbrs: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for a, b in self.edges.tolist():
            nbrs[a].add(b)
            nbrs[b].add(a)
        V = self.vertices
        rows = []
        for m, ns in enumerate(nbrs):
            ns = sorted(ns)
            for i, a in enumerate(ns):
                for b in ns[i + 1:]:
                    da, db = V[a] - V[m], V[b] - V[m]
                    if orient2d(V[a], V[m], V[b]) == 0 and np.dot(da, db) < 0:
                        la, lb = np.hypot(*da), np.hypot(*db)
                        rows.append((a, m, b, la / (la + lb)))
        if not rows:
            return np.zeros((0, 4))
        return _freeze(np.array(rows, dtype=float))

    @cached_property
    def _buckets(self):
        V = self.vertices
        lo = V.min(axis=0)
        hi = V.max(axis=0)
        nb = max(1, int(np.sqrt(self.n_triangles / 2.0)))
        size = np.maximum((hi - lo) / nb, 1e-300)
        tv = V[self.triangles]
        tlo = np.floor((tv.min(axis=1) - lo) / size).astype(int).clip(0, nb - 1)
        thi = np.floor((tv.max(axis=1) - lo) / size).astype(int).clip(0, nb - 1)
        buckets: dict[tuple[int, int], list[int]] = {}
        for t in range(self.n_triangles):
            for i in range(tlo[t, 0], thi[t, 0] + 1):
                for j in range(tlo[t, 1], thi[t, 1] + 1):
                    buckets.setdefault((i, j), []).append(t)
        packed = {k: np.array(v, dtype=np.int64) for k, v in buckets.items()}
        return lo, size, nb, packed

    def candidate_triangles(self, p) -> np.ndarray:
        lo, size, nb, buckets = self._buckets
        i, j = (np.floor((np.asarray(p) - lo) / size).astype(int)).clip(0, nb - 1)
        return buckets.get((int(i), int(j)), np.zeros(0, np.int64))

    def triangles_near_segment(self, p, q) -> np.ndarray:
        """Triangles whose bucket cells meet segment ``pq`` (a superset)."""
        lo, size, nb, buckets = self._buckets
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        steps = int(np.ceil(np.max(np.abs(q - p) / size) * 2)) + 1
        s = np.linspace(0.0, 1.0, steps + 1)[:, None]
        cells = np.floor((p + s * (q - p) - lo) / size).astype(int)
        found = set()
        for i, j in {(int(a), int(b)) for a, b in cells}:
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    found.add((i + di, j + dj))
        parts = [buckets[c] for c in found if c in buckets]
        if not parts:
            return np.zeros(0, np.int64)
        return np.unique(np.concatenate(parts))

    def locate(self, p) -> tuple[int, np.ndarray]:
        """Containing triangle and barycentric weights of point ``p``.

        Points on shared edges go to the lowest-index containing triangle.
        """
        p = np.asarray(p, dtype=float)
        cand = self.candidate_triangles(p)
        if len(cand):
            t, lam = self._locate_in(p, cand)
            if t >= 0:
                return t, lam
        t, lam = self._locate_in(p, np.arange(self.n_triangles))
        if t < 0:
            raise DomainError("point outside domain")
        return t, lam

    def locate_many(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised :meth:`locate`; same tie-breaking for points on edges."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        lo, size, nb, buckets = self._buckets
        cells = np.floor((pts - lo) / size).astype(int).clip(0, nb - 1)
        empty = np.zeros(0, np.int64)
        cand = [buckets.get((int(i), int(j)), empty) for i, j in cells]
        owner = np.repeat(np.arange(len(pts)), [len(c) for c in cand])
        tris = np.concatenate(cand) if cand else empty
        V = self.vertices
        tv = V[self.triangles[tris]]
        q = pts[owner]

        def cr(u, w):
            return (w[:, 0] - u[:, 0]) * (q[:, 1] - u[:, 1]) - (w[:, 1] - u[:, 1]) * (q[:, 0] - u[:, 0])

        l0, l1, l2 = cr(tv[:, 1], tv[:, 2]), cr(tv[:, 2], tv[:, 0]), cr(tv[:, 0], tv[:, 1])
        lam = np.stack([l0, l1, l2], axis=1) / (l0 + l1 + l2)[:, None]
        strict = lam.min(axis=1) > 1e-12
        out_t = -np.ones(len(pts), dtype=np.int64)
        out_l = np.zeros((len(pts), 3))
        out_t[owner[strict]] = tris[strict]
        out_l[owner[strict]] = lam[strict]
        for i in np.flatnonzero(out_t < 0):
            out_t[i], out_l[i] = self.locate(pts[i])
        return out_t, out_l

    def _locate_in(self, p, cand):
        V = self.vertices
        tri = self.triangles[cand]
        a, b, c = V[tri[:, 0]], V[tri[:, 1]], V[tri[:, 2]]

        def cr(u, w):
            return (w[:, 0] - u[:, 0]) * (p[1] - u[:, 1]) - (w[:, 1] - u[:, 1]) * (p[0] - u[:, 0])

        l0, l1, l2 = cr(b, c), cr(c, a), cr(a, b)
        area2 = l0 + l1 + l2
        lam = np.stack([l0, l1, l2], axis=1) / area2[:, None]
        mins = lam.min(axis=1)
        order = np.argsort(cand, kind="stable")
        for k in order:
            if mins[k] > 1e-12:
                return int(cand[k]), lam[k]
            if mins[k] > -1e-12:
                t = tri[k]
                if all(orient2d(V[t[i]], V[t[(i + 1) % 3]], p) >= 0 for i in range(3)):
                    return int(cand[k]), lam[k]
        k = int(np.argmax(mins))
        tol = self.tol / max(1.0, float(np.sqrt(np.abs(area2[k]))))
        if mins[k] >= -tol:
            return int(cand[k]), lam[k]
        return -1, None


class _NodeRegistry:
    """Deduplicates vertices that coincide up to a snapping resolution."""

    def __init__(self, res: float):
        self.res = res
        self.keys: dict[tuple[int, int], int] = {}
        self.points: list[tuple[float, float]] = []

    def add(self, p) -> int:
        kx, ky = int(round(p[0] / self.res)), int(round(p[1] / self.res))
        for dx in (0, -1, 1):
            for dy in (0, -1, 1):
                k = self.keys.get((kx + dx, ky + dy))
                if k is not None:
                    q = self.points[k]
                    if abs(q[0] - p[0]) <= self.res and abs(q[1] - p[1]) <= self.res:
                        return k
        self.keys[(kx, ky)] = len(self.points)
        self.points.append((float(p[0]), float(p[1])))
        return len(self.points) - 1


def _ear_triangulate(ids: list[int], pts: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate a convex polygon that may contain collinear vertices,
    keeping every vertex (no hanging nodes) and emitting no slivers."""
    ids = list(ids)
    out = []
    while len(ids) > 3:
        n = len(ids)
        for k in range(n):
            u, v, w = ids[k - 1], ids[k], ids[(k + 1) % n]
            if orient2d(pts[u], pts[v], pts[w]) <= 0:
                continue
            rest = ids[:k] + ids[k + 1:]
            if polygon_area(pts[rest]) <= 0 and len(rest) >= 3:
                continue
            out.append((u, v, w))
            ids = rest
            break
        else:
            return out
    if len(ids) == 3 and orient2d(pts[ids[0]], pts[ids[1]], pts[ids[2]]) > 0:
        out.append(tuple(ids))
    return out


def triangulate_grid(domain, nx: int, ny: int) -> Triangulation:
    """Triangulate a convex polygon with an ``nx`` by ``ny`` grid over its bounding box.

    Each grid cell is cut along the diagonal from corner ``(i, j)`` to
    ``(i+1, j+1)``. Cells crossing the boundary are clipped to the domain
    and the clipped pieces are triangulated conformingly.
    """
    if nx < 2 or ny < 2:
        raise DomainError("nx and ny must be >= 2")
    poly = as_ccw_polygon(domain)
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    xs = np.linspace(lo[0], hi[0], nx)
    ys = np.linspace(lo[1], hi[1], ny)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    grid = np.column_stack([X.ravel(), Y.ravel()])  # node (i, j) at j * nx + i
    tol = tol_geom(poly)
    inside = points_in_convex_polygon(poly, grid, tol)

    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="xy")
    i, j = i.ravel(), j.ravel()
    v00 = j * nx + i
    v10 = v00 + 1
    v11 = v00 + nx + 1
    v01 = v00 + nx
    tris = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    full = inside[tris].all(axis=1)

    if full.all():
        return Triangulation(grid, tris, poly)

    reg = _NodeRegistry(1e-10 * (1.0 + float(np.max(np.abs(poly)))))
    # register grid nodes first so their indices follow grid order
    gid = -np.ones(len(grid), dtype=np.int64)
    for k in np.flatnonzero(inside):
        gid[k] = reg.add(grid[k])
    out = [tuple(gid[t]) for t in tris[full]]
    for t in tris[~full]:
        piece = clip_convex_polygon(grid[t], poly)
        if len(piece) < 3 or polygon_area(piece) <= tol * tol:
            continue
        ids = []
        for p in piece:
            k = reg.add(p)
            if not ids or ids[-1] != k:
                ids.append(k)
        if len(ids) > 1 and ids[0] == ids[-1]:
            ids.pop()
        pts = np.array(reg.points)
        out.extend(_ear_triangulate(ids, pts))
    pts = np.array(reg.points)
    tri = np.array(out, dtype=np.int64)
    used = np.unique(tri)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return Triangulation(pts[used], remap[tri], poly)
