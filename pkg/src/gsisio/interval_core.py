"""Interval vectors (axis-aligned boxes) and exact linear image bounds."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .matrix_kit import as_matrix, sign_split

__all__ = [
    "EmptyIntersectionError",
    "IntervalVector",
    "contains",
    "elementwise_meet",
    "linear_map_bounds",
    "linear_map_extrema_oracle",
    "width_norm",
]


class EmptyIntersectionError(ValueError):
    """Raised when a meet of two boxes is empty in some coordinate."""


def _as_vector(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return a


@dataclass(frozen=True)
class IntervalVector:
    """A box [lower, upper] in R^n, lower <= upper componentwise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lower, "lower")
        hi = _as_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise ValueError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            i = int(np.argmax(lo - hi))
            raise ValueError(
                f"inverted interval in coordinate {i}: "
                f"lower={lo[i]!r} > upper={hi[i]!r}"
            )
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def vertices(self) -> np.ndarray:
        """All 2^n corner points, one per row. Only sensible for small n."""
        cols = [(self.lower[i], self.upper[i]) for i in range(self.dim)]
        return np.array(list(itertools.product(*cols)), dtype=float)


def linear_map_bounds(a, box: IntervalVector) -> IntervalVector:
    """Tight image bounds of {A x : x in box} via the sign split.

    upper = A_plus @ box.upper - A_minus @ box.lower and symmetrically
    for the lower bound. Exact for interval boxes.
    """
    a = as_matrix(a, "map matrix")
    if a.shape[1] != box.dim:
        raise ValueError(f"matrix has {a.shape[1]} columns, box has dim {box.dim}")
    ap, am = sign_split(a)
    hi = ap @ box.upper - am @ box.lower
    lo = ap @ box.lower - am @ box.upper
    return IntervalVector(lo, hi)


def linear_map_extrema_oracle(a, box: IntervalVector) -> IntervalVector:
    """Brute-force image bounds by enumerating all 2^n box vertices.

    Reference oracle for linear_map_bounds. Refuses dimensions above 20
    (vertex count would exceed a million).
    """
    a = as_matrix(a, "map matrix")
    if box.dim > 20:
        raise ValueError(f"vertex enumeration refused for dim {box.dim} > 20")
    if a.shape[1] != box.dim:
        raise ValueError(f"matrix has {a.shape[1]} columns, box has dim {box.dim}")
    images = box.vertices() @ a.T
    return IntervalVector(images.min(axis=0), images.max(axis=0))


def contains(box: IntervalVector, x, tol: float = 1e-9) -> bool:
    """Membership test with an absolute slack of tol per coordinate."""
    x = _as_vector(x, "point")
    if x.shape != box.lower.shape:
        raise ValueError("point dimension does not match box")
    return bool(np.all(x >= box.lower - tol) and np.all(x <= box.upper + tol))


def width_norm(box: IntervalVector) -> float:
    """Euclidean norm of the width vector upper - lower."""
    return float(np.linalg.norm(box.width))


def elementwise_meet(a: IntervalVector, b: IntervalVector) -> IntervalVector:
    """Componentwise intersection of two boxes.

    An empty intersection in any coordinate raises
    EmptyIntersectionError; silently clamping would hide an unsound
    bound upstream.
    """
    if a.dim != b.dim:
        raise ValueError("boxes have different dimensions")
    lo = np.maximum(a.lower, b.lower)
    hi = np.minimum(a.upper, b.upper)
    if np.any(lo > hi):
        i = int(np.argmax(lo - hi))
        raise EmptyIntersectionError(
            f"empty meet in coordinate {i}: [{lo[i]!r}, {hi[i]!r}]"
        )
    return IntervalVector(lo, hi)
