"""Named test fields on the square ``[-1, 1]^2``."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .field import PLField, sample
from .mesh import triangulate_grid

__all__ = [
    "SQUARE",
    "PRESETS",
    "default_grid",
    "osc_grid",
    "preset_function",
    "preset_field",
    "preset_factory",
]

SQUARE = ((-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0))


def _osc(x, y):
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0, 1.0, x)
    return np.where(x == 0, 0.0, x * x * np.sin(1.0 / safe)) + 0.0 * np.asarray(y)


PRESETS: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "neg-abs-x": lambda x, y: -np.abs(x),
    "abs-x": lambda x, y: np.abs(x),
    "affine": lambda x, y: 1.0 + 2.0 * x - y,
    "saddle": lambda x, y: x * y,
    "osc": _osc,
    "sine-bump": lambda x, y: np.sin(3 * x) * np.sin(3 * y),
}


def preset_function(name: str):
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def default_grid(name: str) -> tuple[int, int]:
    """17 x 17 nodes, except the oscillating preset which uses its level-3 grid."""
    preset_function(name)
    return osc_grid(3) if name == "osc" else (17, 17)


def preset_field(name: str, nx: int | None = None, ny: int | None = None,
                 domain=SQUARE) -> PLField:
    if nx is None or ny is None:
        nx, ny = default_grid(name)
    return sample(triangulate_grid(domain, nx, ny), preset_function(name))


def osc_grid(level: int) -> tuple[int, int]:
    """Grid for the oscillating preset at a diagnostic level.

    Only the x-direction carries oscillation, so only ``nx`` is refined,
    by a factor 4 per level.
    """
    return 8 * 4 ** (level - 1) + 1, 5


def preset_factory(name: str, nx: int | None = None, ny: int | None = None, domain=SQUARE):
    """Field or level-to-field callable used by the curve diagnostics.

    The oscillating preset is resampled on a grid refined with the level;
    every other preset is a fixed field.
    """
    if name == "osc":
        return lambda level: preset_field(name, *osc_grid(level), domain=domain)
    return preset_field(name, nx, ny, domain)
