"""Orientation predicates with exact sign decisions.

Both predicates evaluate the determinant in double precision first and fall
back to exact integer arithmetic only when the float result is within the
forward error bound (Shewchuk's static filter). Inputs are treated as the
exact binary values they hold, so every sign, including zero, is exact.
"""
from __future__ import annotations

import numpy as np

_EPS = np.finfo(float).eps / 2.0
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_O3D_BOUND = (7.0 + 56.0 * _EPS) * _EPS


def _as_integers(values) -> list[int]:
    """Scale binary floats by a common power of two into exact integers.

    Determinants are homogeneous, so the common scale leaves signs intact.
    """
    ratios = [float(v).as_integer_ratio() for v in values]
    den = max(d for _, d in ratios)
    return [n * (den // d) for n, d in ratios]


def _orient2d_exact(ax, ay, bx, by, cx, cy) -> int:
    ax, ay, bx, by, cx, cy = _as_integers((ax, ay, bx, by, cx, cy))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (det > 0) - (det < 0)


def orient2d(a, b, c) -> int:
    """Sign of the signed area of triangle ``abc``: +1 CCW, -1 CW, 0 collinear."""
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    cx, cy = float(c[0]), float(c[1])
    left = (ax - cx) * (by - cy)
    right = (ay - cy) * (bx - cx)
    det = left - right
    bound = _CCW_BOUND * (abs(left) + abs(right))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return _orient2d_exact(ax, ay, bx, by, cx, cy)


def orient2d_many(a, b, pts: np.ndarray) -> np.ndarray:
    """Vectorised :func:`orient2d` of every row of ``pts`` against edge ``ab``."""
    pts = np.asarray(pts, dtype=float)
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    cx, cy = pts[:, 0], pts[:, 1]
    left = (ax - cx) * (by - cy)
    right = (ay - cy) * (bx - cx)
    det = left - right
    bound = _CCW_BOUND * (np.abs(left) + np.abs(right))
    out = np.where(det > bound, 1, np.where(-det > bound, -1, 0)).astype(np.int8)
    for i in np.flatnonzero(np.abs(det) <= bound):
        out[i] = _orient2d_exact(ax, ay, bx, by, cx[i], cy[i])
    return out


def orient2d_rows(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Row-wise :func:`orient2d` for ``(n, 2)`` arrays."""
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    cx, cy = c[:, 0], c[:, 1]
    left = (ax - cx) * (by - cy)
    right = (ay - cy) * (bx - cx)
    det = left - right
    bound = _CCW_BOUND * (np.abs(left) + np.abs(right))
    out = np.where(det > bound, 1, np.where(-det > bound, -1, 0)).astype(np.int8)
    for i in np.flatnonzero(np.abs(det) <= bound):
        out[i] = _orient2d_exact(ax[i], ay[i], bx[i], by[i], cx[i], cy[i])
    return out


def _orient3d_exact(a, b, c, d) -> int:
    v = _as_integers([*a[:3], *b[:3], *c[:3], *d[:3]])
    a, b, c, d = v[0:3], v[3:6], v[6:9], v[9:12]
    adx, ady, adz = a[0] - d[0], a[1] - d[1], a[2] - d[2]
    bdx, bdy, bdz = b[0] - d[0], b[1] - d[1], b[2] - d[2]
    cdx, cdy, cdz = c[0] - d[0], c[1] - d[1], c[2] - d[2]
    det = (adx * (bdy * cdz - bdz * cdy)
           + bdx * (cdy * adz - cdz * ady)
           + cdx * (ady * bdz - adz * bdy))
    # det is Shewchuk's orientation; negate so "d above" is positive
    return (det < 0) - (det > 0)


def orient3d(a, b, c, d) -> int:
    """+1 if ``d`` lies above the plane through ``a, b, c``, -1 below, 0 on it.

    "Above" is taken with ``a, b, c`` counterclockwise in the xy-projection.
    """
    return int(orient3d_many(a, b, c, np.asarray([d], dtype=float))[0])


def orient3d_many(a, b, c, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    return orient3d_rows(np.broadcast_to(a, (n, 3)), np.broadcast_to(b, (n, 3)),
                         np.broadcast_to(c, (n, 3)), pts)


def orient3d_rows(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Row-wise :func:`orient3d` for ``(n, 3)`` arrays."""
    pts = d
    dx, dy, dz = pts[:, 0], pts[:, 1], pts[:, 2]
    adx, ady, adz = a[:, 0] - dx, a[:, 1] - dy, a[:, 2] - dz
    bdx, bdy, bdz = b[:, 0] - dx, b[:, 1] - dy, b[:, 2] - dz
    cdx, cdy, cdz = c[:, 0] - dx, c[:, 1] - dy, c[:, 2] - dz
    bc = bdy * cdz - bdz * cdy
    ca = cdy * adz - cdz * ady
    ab = ady * bdz - adz * bdy
    det = adx * bc + bdx * ca + cdx * ab
    perm = ((np.abs(bdy * cdz) + np.abs(bdz * cdy)) * np.abs(adx)
            + (np.abs(cdy * adz) + np.abs(cdz * ady)) * np.abs(bdx)
            + (np.abs(ady * bdz) + np.abs(adz * bdy)) * np.abs(cdx))
    bound = _O3D_BOUND * perm
    out = np.where(det < -bound, 1, np.where(det > bound, -1, 0)).astype(np.int8)
    for i in np.flatnonzero(np.abs(det) <= bound):
        out[i] = _orient3d_exact(a[i], b[i], c[i], pts[i])
    return out
