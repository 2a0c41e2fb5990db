"""Closed convex curves, slope variation along them and turn of lifted curves."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateError, DomainError
from .field import CurveRestriction, PLField, lipschitz_constant, restrict_to_curve
from .geometry import as_ccw_polygon, convex_hull_2d, is_convex_polygon, tol_geom
from .predicates import orient2d

__all__ = [
    "ClosedConvexCurve",
    "LiftedCurve",
    "HomogeneousConvexPL",
    "ThetaBounds",
    "HomogeneousBoundCheck",
    "ConditionEstimate",
    "regular_polygon",
    "rectangle",
    "lift",
    "variation_of_slope",
    "planar_turn",
    "turn_of_lifted_curve",
    "theta",
    "theta_bounds_check",
    "lemma1_bound_check",
    "curve_family",
    "dc_condition_estimate",
    "is_plateau",
]


@dataclass(frozen=True, eq=False)
class ClosedConvexCurve:
    """Counterclockwise convex polygon traversed by arc length from ``vertices[0]``."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3 or not np.all(np.isfinite(v)):
            raise DegenerateError("curve needs at least 3 finite vertices")
        if np.any(np.hypot(*np.diff(np.vstack([v, v[:1]]), axis=0).T) == 0):
            raise DegenerateError("degenerate segment")
        n = len(v)
        turns = [orient2d(v[i - 1], v[i], v[(i + 1) % n]) for i in range(n)]
        if min(turns) < 0 or sum(t > 0 for t in turns) < 3 or not is_convex_polygon(v):
            raise DomainError("curve must be convex and counterclockwise")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @cached_property
    def cumulative_length(self) -> np.ndarray:
        e = np.diff(np.vstack([self.vertices, self.vertices[:1]]), axis=0)
        return np.concatenate([[0.0], np.cumsum(np.hypot(e[:, 0], e[:, 1]))])

    @property
    def T_r(self) -> float:
        return float(self.cumulative_length[-1])

    def __call__(self, t: float) -> np.ndarray:
        """Point at arc length ``t`` (taken modulo the length)."""
        t = float(t) % self.T_r
        cum = self.cumulative_length
        i = min(int(np.searchsorted(cum, t, side="right")) - 1, len(self.vertices) - 1)
        a, b = self.vertices[i], self.vertices[(i + 1) % len(self.vertices)]
        return a + (t - cum[i]) / (cum[i + 1] - cum[i]) * (b - a)

    def contains(self, p, strict: bool = True) -> bool:
        v = self.vertices
        n = len(v)
        s = [orient2d(v[i], v[(i + 1) % n], p) for i in range(n)]
        return min(s) > 0 if strict else min(s) >= 0


def regular_polygon(k: int, radius: float, center=(0.0, 0.0), phase: float | None = None
                    ) -> ClosedConvexCurve:
    """Regular ``k``-gon; the default phase puts an edge at the bottom."""
    if phase is None:
        phase = -np.pi / 2 + np.pi / k
    a = phase + 2 * np.pi * np.arange(k) / k
    c = np.asarray(center, dtype=float)
    return ClosedConvexCurve(c + radius * np.column_stack([np.cos(a), np.sin(a)]))


def rectangle(width: float, height: float, angle: float = 0.0, center=(0.0, 0.0)
              ) -> ClosedConvexCurve:
    """Rectangle with sides ``width`` (along ``angle``) and ``height``."""
    hw, hh = width / 2, height / 2
    box = np.array([(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)])
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return ClosedConvexCurve(np.asarray(center, dtype=float) + box @ rot.T)


@dataclass(frozen=True, eq=False)
class LiftedCurve:
    """Breakpoints of ``R(t) = (r(t), f(r(t)))`` and its tangent per segment."""

    breakpoints: np.ndarray
    tangents: np.ndarray


def lift(field: PLField, curve: ClosedConvexCurve) -> LiftedCurve:
    r = restrict_to_curve(field, curve)
    return LiftedCurve(r.breakpoints, np.column_stack([r.directions, r.slopes]))


def _cyclic_variation(x: np.ndarray) -> float:
    return float(np.sum(np.abs(np.roll(x, -1) - x)))


def variation_of_slope(restriction: CurveRestriction) -> float:
    """Total variation of the piecewise-constant derivative around the loop."""
    s = np.asarray(restriction.slopes, dtype=float)
    if len(s) < 2:
        raise DegenerateError("need at least two segments")
    return _cyclic_variation(s)


def _angles(u: np.ndarray) -> np.ndarray:
    """Angles between consecutive rows of ``u`` (cyclically)."""
    v = np.roll(u, -1, axis=0)
    cross = np.linalg.norm(np.cross(u, v), axis=1)
    return np.arctan2(cross, np.einsum("ij,ij->i", u, v))


def planar_turn(curve: ClosedConvexCurve) -> float:
    e = np.diff(np.vstack([curve.vertices, curve.vertices[:1]]), axis=0)
    return float(np.sum(_angles(np.column_stack([e, np.zeros(len(e))]))))


def turn_of_lifted_curve(field: PLField, curve: ClosedConvexCurve) -> float:
    """Sum of angles between successive tangents of the lifted curve.

    For PL data the breakpoint partition already attains the supremum over
    partitions, since tangents are constant between breakpoints.
    """
    return _turn(restrict_to_curve(field, curve))


def _turn(r: CurveRestriction) -> float:
    if np.any(np.diff(r.breakpoints) <= 0):
        raise DegenerateError("degenerate segment")
    return float(np.sum(_angles(np.column_stack([r.directions, r.slopes]))))


def theta(x):
    """Slope-to-sine map ``x / sqrt(1 + x^2)``."""
    x = np.asarray(x, dtype=float)
    return x / np.sqrt(1.0 + x * x)


@dataclass(frozen=True)
class ThetaBounds:
    turn: float
    lower: float
    upper: float
    ok: bool
    scale: float


def theta_bounds_check(field: PLField, curve: ClosedConvexCurve, tol: float = 1e-9) -> ThetaBounds:
    """Two-sided comparison of the turn with slope variation through ``theta``.

    The vertical component of each unit lifted tangent is ``theta(slope)``,
    so the angle sum dominates the variation of ``theta`` along the loop.
    The upper estimate adds the planar turn and is scaled by
    ``sqrt(1 + L^2)`` with ``L`` the Lipschitz constant of the field.
    """
    r = restrict_to_curve(field, curve)
    turn = _turn(r)
    lower = _cyclic_variation(theta(r.slopes))
    upper = planar_turn(curve) + lower
    scale = math.sqrt(1.0 + lipschitz_constant(field) ** 2)
    ok = lower <= turn + tol and turn <= upper * scale + tol
    return ThetaBounds(turn, lower, upper, bool(ok), scale)


@dataclass(frozen=True, eq=False)
class HomogeneousConvexPL:
    """``psi(q) = max_v <v, q>`` over a finite set of generators."""

    generators: np.ndarray

    def __post_init__(self):
        g = np.array(self.generators, dtype=float).reshape(-1, 2)
        if len(g) == 0 or not np.all(np.isfinite(g)):
            raise DegenerateError("need at least one finite generator")
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)

    def __call__(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return np.max(q @ self.generators.T, axis=-1)

    @property
    def lipschitz(self) -> float:
        return float(np.max(np.hypot(self.generators[:, 0], self.generators[:, 1])))

    @property
    def subdifferential_perimeter(self) -> float:
        """Perimeter of the hull of the generators (a segment counts twice)."""
        hull = convex_hull_2d(self.generators)
        if len(hull) == 1:
            return 0.0
        if len(hull) == 2:
            return 2.0 * float(np.hypot(*(hull[1] - hull[0])))
        e = np.roll(hull, -1, axis=0) - hull
        return float(np.sum(np.hypot(e[:, 0], e[:, 1])))

    def edge_slopes(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Slopes by arc length of ``psi`` along segment ``pq``, in order."""
        d = q - p
        length = float(np.hypot(*d))
        a = self.generators @ p
        b = self.generators @ d
        # candidate switch points: pairwise line intersections inside (0, 1)
        num = a[None, :] - a[:, None]
        den = b[:, None] - b[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = num / den
        s = s[np.isfinite(s) & (s > 0) & (s < 1)]
        cuts = np.unique(np.concatenate([[0.0, 1.0], s]))
        mids = 0.5 * (cuts[1:] + cuts[:-1])
        vals = a[None, :] + mids[:, None] * b[None, :]
        best = vals.max(axis=1, keepdims=True)
        # among tied maximisers the largest slope is active just after the cut
        tie = vals >= best - 1e-12 * (1.0 + np.abs(best))
        slope = np.where(tie, b[None, :], -np.inf).max(axis=1) / length
        keep = np.r_[True, np.diff(slope) != 0]
        return slope[keep]


@dataclass(frozen=True)
class HomogeneousBoundCheck:
    variation: float
    bound: float
    ok: bool


def lemma1_bound_check(psi: HomogeneousConvexPL, curve: ClosedConvexCurve,
                       tol: float = 1e-9) -> HomogeneousBoundCheck:
    """Slope variation of ``psi`` around ``curve`` against ``2 P + L T_r``.

    ``P`` is the perimeter of the subdifferential at the origin (the hull
    of the generators) and ``L`` the largest generator norm.
    """
    if not curve.contains((0.0, 0.0), strict=True):
        raise DomainError("origin not enclosed")
    v = curve.vertices
    n = len(v)
    slopes = np.concatenate([psi.edge_slopes(v[i], v[(i + 1) % n]) for i in range(n)])
    variation = _cyclic_variation(slopes)
    bound = 2.0 * psi.subdifferential_perimeter + psi.lipschitz * curve.T_r
    return HomogeneousBoundCheck(variation, bound, bool(variation <= bound + tol))


def _fit_inside(domain: np.ndarray, center: np.ndarray, pts: np.ndarray, margin: float
                ) -> np.ndarray:
    """Shrink ``pts`` towards ``center`` until they clear every domain edge by ``margin``."""
    e = np.roll(domain, -1, axis=0) - domain
    normal = np.column_stack([-e[:, 1], e[:, 0]])
    normal /= np.hypot(normal[:, 0], normal[:, 1])[:, None]
    off = np.einsum("ij,ij->i", normal, domain) + margin
    slack = normal @ center - off
    if np.any(slack <= 0):
        raise DomainError("curve center outside domain")
    d = pts - center
    nd = d @ normal.T
    with np.errstate(divide="ignore"):
        lim = np.where(nd < 0, slack[None, :] / -nd, np.inf)
    t = min(1.0, 0.999 * float(lim.min()))
    return center + t * d


def _level_rng(seed: int, level: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(level)])


def _level_curves(domain: np.ndarray, level: int, seed: int) -> list[ClosedConvexCurve]:
    """Curves first introduced at ``level``; families at higher levels add to these."""
    c = domain.mean(axis=0)
    e = np.roll(domain, -1, axis=0) - domain
    normal = np.column_stack([-e[:, 1], e[:, 0]]) / np.hypot(e[:, 0], e[:, 1])[:, None]
    inradius = float(np.min(normal @ c - np.einsum("ij,ij->i", normal, domain)))
    margin = tol_geom(domain) * 1e3
    rng = _level_rng(seed, level)
    ks = [4, 8] if level == 1 else [2 ** (level + 2)]
    shapes: list[tuple[np.ndarray, np.ndarray]] = []

    def gon(k, radius, center, phase=None):
        shapes.append((center, regular_polygon(k, radius, center, phase).vertices))

    for k in ks:
        for frac in (0.95, 0.5):
            gon(k, frac * inradius * (math.sqrt(2) if k == 4 else 1.0), c)
    for _ in range(3):
        k = int(rng.choice([4, 8] + [2 ** (j + 2) for j in range(2, level + 1)]))
        off = rng.uniform(-0.5, 0.5, 2) * inradius
        gon(k, rng.uniform(0.1, 0.6) * inradius, c + off, rng.uniform(0, 2 * np.pi))
    aspect = 10.0 ** (-level)
    length = 1.8 * inradius
    n_dir = 2 ** (level + 1)
    for m in range(n_dir):
        ang = np.pi * m / n_dir
        rect = rectangle(length, length * aspect, ang, c)
        shapes.append((c, rect.vertices))
    for _ in range(2):
        off = rng.uniform(-0.5, 0.5, 2) * inradius
        ang = rng.uniform(0, np.pi)
        w = rng.uniform(0.3, 1.0) * inradius
        shapes.append((c + off, rectangle(w, w * aspect, ang, c + off).vertices))
    out = []
    for center, pts in shapes:
        out.append(ClosedConvexCurve(_fit_inside(domain, center, pts, margin)))
    return out


def curve_family(domain, level: int, seed: int = 0) -> list[ClosedConvexCurve]:
    """Deterministic sample of closed convex curves strictly inside ``domain``.

    Level ``l`` adds regular ``2**(l+2)``-gons, random-centred polygons and
    thin rectangles of aspect ``10**-l`` along ``2**(l+1)`` directions to the
    family of level ``l - 1``; level 1 starts with centred squares and
    octagons. Families are nested, so suprema over them never decrease.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    dom = as_ccw_polygon(domain)
    out: list[ClosedConvexCurve] = []
    for lv in range(1, level + 1):
        out.extend(_level_curves(dom, lv, seed))
    return out


@dataclass(frozen=True)
class ConditionEstimate:
    variation: tuple[float, ...]
    turn: tuple[float, ...]

    @property
    def variation_plateau(self) -> bool:
        return is_plateau(self.variation)

    @property
    def turn_plateau(self) -> bool:
        return is_plateau(self.turn)

    @property
    def growth(self) -> float:
        """Ratio of the last to the first variation estimate."""
        a, b = self.variation[0], self.variation[-1]
        return b / a if a > 0 else (1.0 if b == 0 else math.inf)


def is_plateau(series: Sequence[float], rel: float = 0.01) -> bool:
    """Last two values agree within ``rel`` (relative to the larger)."""
    if len(series) < 2:
        return True
    a, b = series[-2], series[-1]
    return abs(b - a) <= rel * max(abs(a), abs(b))


def _threads() -> int:
    raw = os.environ.get("DC_SPLIT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError("DC_SPLIT_THREADS must be an integer >= 1") from None
    if n < 1:
        raise ValueError("DC_SPLIT_THREADS must be an integer >= 1")
    return n


def _measure(field: PLField, curve: ClosedConvexCurve) -> tuple[float, float]:
    r = restrict_to_curve(field, curve)
    return variation_of_slope(r), _turn(r)


def dc_condition_estimate(field: PLField | Callable[[int], PLField], levels: int,
                          seed: int = 0) -> ConditionEstimate:
    """Per-level suprema of slope variation and lifted turn over the curve family.

    ``field`` may be a callable mapping a level to a field, which ties the
    sampling resolution to the level. Curves are evaluated on up to
    ``DC_SPLIT_THREADS`` threads and reduced in family order.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    var, turn = [], []
    workers = _threads()
    for level in range(1, levels + 1):
        fld = field if isinstance(field, PLField) else field(level)
        curves = curve_family(fld.mesh.domain, level, seed)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                res = list(pool.map(lambda cv: _measure(fld, cv), curves))
        else:
            res = [_measure(fld, cv) for cv in curves]
        var.append(max(r[0] for r in res))
        turn.append(max(r[1] for r in res))
    return ConditionEstimate(tuple(var), tuple(turn))
