"""Piecewise-linear functions of one variable and their Jordan DC split."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError
from .field import PLField, restrict_to_segment

__all__ = ["PLFunction1D", "derivative_variation", "dc_split_1d", "segment_oracle"]


@dataclass(frozen=True, eq=False)
class PLFunction1D:
    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k = np.array(self.knots, dtype=float)
        v = np.array(self.values, dtype=float)
        if k.ndim != 1 or k.shape != v.shape:
            raise DomainError("knots and values must be 1-d arrays of equal length")
        if len(k) < 2:
            raise DegenerateError("need at least two knots")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(v))):
            raise DomainError("knots and values must be finite")
        if np.any(np.diff(k) <= 0):
            raise DomainError("knots must be strictly increasing")
        k.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def __call__(self, x):
        return np.interp(x, self.knots, self.values)


def derivative_variation(fn: PLFunction1D) -> float:
    """Total variation of the slope sequence over the open interval."""
    return float(np.sum(np.abs(np.diff(fn.slopes))))


def dc_split_1d(fn: PLFunction1D) -> tuple[PLFunction1D, PLFunction1D]:
    """Jordan split ``fn = g - h`` with ``g(a) = fn(a)`` and ``h(a) = 0``.

    ``h`` collects the downward slope jumps, so both slope sequences are
    non-decreasing and their variations add up to that of ``fn``.
    """
    s = fn.slopes
    drops = np.concatenate([[0.0], np.cumsum(np.maximum(-np.diff(s), 0.0))])
    h_vals = np.concatenate([[0.0], np.cumsum(drops * np.diff(fn.knots))])
    h = PLFunction1D(fn.knots, h_vals)
    g = PLFunction1D(fn.knots, fn.values + h_vals)
    return g, h


def segment_oracle(field: PLField, p0, p1) -> float:
    """Slope variation of the field along segment ``p0 p1``."""
    knots, values = restrict_to_segment(field, p0, p1)
    return derivative_variation(PLFunction1D(knots, values))
