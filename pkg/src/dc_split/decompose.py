"""Iterative difference-of-convex decomposition of a PL field.

The field ``f`` is written as ``f1 - sum(F)`` where ``f1`` is its convex
minorant and the ``F`` are finite functions (connected pieces of
``f1 - f``). Each finite function ``F`` of depth ``k`` enters the expansion
with sign ``(-1)**k``. It is replaced by its convex minorant ``M`` on the
convex hull of its support minus children extracted from ``M - F``;
``M`` is split into its supporting-plane extension ``M_ext`` and the convex
remainder ``M_ext - M``, which go to ``g`` or ``h`` according to the sign.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .envelope import ConvexPLFunction, check_convexity, convex_minorant
from .field import PLField, lipschitz_constant, tol_num
from .geometry import convex_hull_2d, points_in_convex_polygon

__all__ = [
    "FiniteFunction",
    "DCPair",
    "DepthRecord",
    "Term",
    "DecompositionTrace",
    "extract_finite_functions",
    "dc_decompose",
    "sign_assembly",
    "lipschitz_audit",
    "LipschitzAudit",
    "partial_sum",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FiniteFunction:
    field: PLField
    support_triangles: frozenset[int]
    support_hull: np.ndarray
    depth: int
    index_path: tuple[int, ...]

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.field.values)))

    def max_gradient(self) -> float:
        g = self.field.triangle_gradients[sorted(self.support_triangles)]
        return float(np.max(np.hypot(g[:, 0], g[:, 1])))


@dataclass(frozen=True, eq=False)
class DCPair:
    g: PLField
    h: PLField
    residual_sup: float


@dataclass(frozen=True)
class DepthRecord:
    depth: int
    count: int
    h_k: float
    residual_budget: float


@dataclass(frozen=True, eq=False)
class Term:
    """One processed finite function and its contribution."""

    finite: FiniteFunction
    sign: int
    extension: np.ndarray  # M_ext at every node
    masked: np.ndarray  # M_ext on co(support), zero elsewhere
    convex: bool


@dataclass(eq=False)
class DecompositionTrace:
    root: ConvexPLFunction
    records: list[DepthRecord] = dc_field(default_factory=list)
    terms: list[Term] = dc_field(default_factory=list)
    discarded: list[FiniteFunction] = dc_field(default_factory=list)
    termination: str = "converged"

    @property
    def depths_used(self) -> int:
        return 1 + max((t.finite.depth for t in self.terms), default=0)

    @property
    def h_series(self) -> list[float]:
        return [r.h_k for r in self.records]

    def finite_functions(self) -> list[FiniteFunction]:
        return [t.finite for t in self.terms] + list(self.discarded)


def _support_threshold(scale: float) -> float:
    return 1e-10 * (1.0 + scale)


def extract_finite_functions(diff: PLField, parent_region=None, depth: int = 1,
                             parent_path=(), scale: float | None = None
                             ) -> list[FiniteFunction]:
    """Split ``diff`` into finite functions with edge-connected supports.

    A triangle belongs to a support when one of its vertices exceeds the
    support threshold ``1e-10 * (1 + scale)`` in absolute value (``scale``
    defaults to ``max |diff|``). Components are ordered by size, largest
    first, then by lowest triangle index.
    """
    mesh = diff.mesh
    vals = diff.values
    if scale is None:
        scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    nz = np.abs(vals) > _support_threshold(scale)
    if parent_region is not None:
        nz &= points_in_convex_polygon(parent_region, mesh.vertices, mesh.tol)
    tri_in = nz[mesh.triangles].any(axis=1)
    if not tri_in.any():
        return []
    sel = np.flatnonzero(tri_in)
    local = -np.ones(mesh.n_triangles, dtype=np.int64)
    local[sel] = np.arange(len(sel))
    adj = mesh.adjacency[sel]
    rows = np.repeat(np.arange(len(sel)), 3)
    cols = local[np.where(adj.ravel() >= 0, adj.ravel(), 0)]
    ok = (adj.ravel() >= 0) & (cols >= 0)
    graph = coo_matrix((np.ones(ok.sum()), (rows[ok], cols[ok])), shape=(len(sel), len(sel)))
    ncomp, labels = connected_components(graph, directed=False)
    comps = [sel[labels == c] for c in range(ncomp)]
    comps.sort(key=lambda c: (-len(c), int(c.min())))
    claimed = np.zeros(mesh.n_vertices, dtype=bool)
    out = []
    for i, tris in enumerate(comps):
        verts = np.unique(mesh.triangles[tris])
        verts = verts[~claimed[verts]]
        claimed[verts] = True
        v = np.zeros(mesh.n_vertices)
        v[verts] = vals[verts]
        hull = convex_hull_2d(mesh.vertices[np.unique(mesh.triangles[tris])])
        out.append(FiniteFunction(PLField(mesh, v), frozenset(int(t) for t in tris),
                                  hull, depth, tuple(parent_path) + (i,)))
    return out


def sign_assembly(root: ConvexPLFunction, terms: list[Term]) -> tuple[np.ndarray, np.ndarray]:
    """Node values of ``g`` and ``h`` from the root minorant and the terms.

    A term with sign ``+1`` adds ``M_ext`` to ``g`` and ``M_ext - M`` to
    ``h``; sign ``-1`` swaps the roles. Both sums are sums of convex
    functions, and ``g - h = f1 + sum(sign * M)``.
    """
    g = np.array(root.as_field.values, dtype=float)
    h = np.zeros_like(g)
    for t in terms:
        bar = t.extension - t.masked
        if t.sign > 0:
            g += t.extension
            h += bar
        else:
            h += t.extension
            g += bar
    return g, h


def partial_sum(trace: DecompositionTrace, t: int) -> np.ndarray:
    """Right-hand side of the depth-``t`` expansion, term for term.

    ``f1 + sum_{k<=t} (-1)^k sum M_k + (-1)^(t+1) sum F_{t+1}`` where the
    last sum runs over every finite function of depth ``t + 1``.
    """
    out = np.array(trace.root.as_field.values, dtype=float)
    for term in trace.terms:
        if term.finite.depth <= t:
            out += term.sign * term.masked
    for ff in trace.finite_functions():
        if ff.depth == t + 1:
            out += (-1) ** (t + 1) * ff.field.values
    return out


def dc_decompose(f: PLField, eps: float, max_iter: int = 50
                 ) -> tuple[DCPair, DecompositionTrace]:
    """Represent ``f`` as ``g - h`` with ``g`` and ``h`` convex on the mesh nodes.

    Finite functions are processed breadth-first by depth. One whose sup is
    at most ``eps`` is discarded while the node-wise sum of discarded
    absolute values stays within ``eps``, so a converged run has
    ``residual_sup <= eps``. The run stops with ``"max_iter"`` when depth
    ``max_iter`` is exceeded and with ``"stalled"`` when the largest
    deviation ``h_k`` fails to decrease for three consecutive depths.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    mesh = f.mesh
    scale = float(np.max(np.abs(f.values)))
    root = convex_minorant(f)
    trace = DecompositionTrace(root)
    diff = PLField(mesh, root.as_field.values - f.values)
    queue = extract_finite_functions(diff, None, 1, (), scale)
    acc = np.zeros(mesh.n_vertices)
    depth = 1
    stall = 0
    prev_h = None
    while queue:
        h_k = max(ff.sup for ff in queue)
        if prev_h is not None and h_k >= prev_h * (1.0 - 1e-12):
            stall += 1
        else:
            stall = 0
        prev_h = h_k
        stop = None
        if depth > max_iter:
            stop = "max_iter"
        elif stall >= 3:
            stop = "stalled"
        nxt: list[FiniteFunction] = []
        for ff in queue:
            a = np.abs(ff.field.values)
            if stop is not None or (ff.sup <= eps and np.max(acc + a) <= eps):
                acc += a
                trace.discarded.append(ff)
                continue
            nxt.extend(_process(ff, trace, scale))
        trace.records.append(DepthRecord(depth, len(queue), h_k, float(np.max(acc))))
        log.debug("depth %d: %d finite functions, h_k=%.3e", depth, len(queue), h_k)
        if stop is not None:
            trace.termination = stop
            break
        queue = nxt
        depth += 1
    g, h = sign_assembly(root, trace.terms)
    residual = float(np.max(np.abs(f.values - (g - h))))
    return DCPair(PLField(mesh, g), PLField(mesh, h), residual), trace


def _process(ff: FiniteFunction, trace: DecompositionTrace, scale: float) -> list[FiniteFunction]:
    mesh = ff.field.mesh
    m = convex_minorant(ff.field, ff.support_hull)
    ext = np.array(m.as_field.values)
    inside = points_in_convex_polygon(ff.support_hull, mesh.vertices, mesh.tol)
    masked = np.where(inside, ext, 0.0)
    rest = PLField(mesh, masked - ff.field.values)
    convex = bool(np.max(np.abs(rest.values)) <= tol_num(ff.field.values))
    sign = -1 if ff.depth % 2 else 1
    trace.terms.append(Term(ff, sign, ext, masked, convex))
    return extract_finite_functions(rest, ff.support_hull, ff.depth + 1, ff.index_path, scale)


@dataclass(frozen=True)
class LipschitzAudit:
    lipschitz: float
    bound: float
    max_gradient: float
    ok: bool
    worst_path: tuple[int, ...] | None


def lipschitz_audit(f: PLField, trace: DecompositionTrace, tol: float = 1e-6) -> LipschitzAudit:
    """Largest gradient over every finite function against ``2 L(f)``."""
    L = lipschitz_constant(f)
    worst, path = 0.0, None
    for ff in trace.finite_functions():
        gmax = ff.max_gradient()
        if gmax > worst:
            worst, path = gmax, (ff.depth,) + ff.index_path
    return LipschitzAudit(L, 2 * L, worst, worst <= 2 * L + tol, path)


def verify_convex(pair: DCPair) -> tuple[bool, bool]:
    return check_convexity(pair.g).is_convex, check_convexity(pair.h).is_convex
