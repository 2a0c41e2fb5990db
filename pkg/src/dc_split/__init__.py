"""Difference-of-convex splitting of piecewise-linear fields on the plane."""
from .decompose import DCPair, DecompositionTrace, FiniteFunction, dc_decompose
from .envelope import ConvexPLFunction, check_convexity, convex_minorant
from .errors import (
    ConvexityError,
    DCSplitError,
    DegenerateError,
    DomainError,
    MeshMismatchError,
)
from .field import PLField, lipschitz_constant, restrict_to_curve, sample
from .mesh import Triangulation, triangulate_grid

__all__ = [
    "ConvexPLFunction",
    "ConvexityError",
    "DCPair",
    "DCSplitError",
    "DecompositionTrace",
    "DegenerateError",
    "DomainError",
    "FiniteFunction",
    "MeshMismatchError",
    "PLField",
    "Triangulation",
    "check_convexity",
    "convex_minorant",
    "dc_decompose",
    "lipschitz_constant",
    "restrict_to_curve",
    "sample",
    "triangulate_grid",
]
