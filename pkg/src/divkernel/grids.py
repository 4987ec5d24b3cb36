"""Evaluation grids, bandwidth ladders, and trapezoid L2 helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

DEFAULT_LO = -0.5
DEFAULT_HI = 1.5
DEFAULT_NPOINTS = 2001
DEFAULT_DELTA = 0.5
DEFAULT_CAP = 32


@dataclass(frozen=True)
class EvaluationGrid:
    """Uniform grid bracketing the unit interval, used to tabulate estimates.

    The default covers [-0.5, 1.5] with 2001 points and is symmetric about
    1/2, which lets reflection about 1/2 act as an exact index reversal.
    """

    lo: float = DEFAULT_LO
    hi: float = DEFAULT_HI
    n_points: int = DEFAULT_NPOINTS

    def __post_init__(self):
        if not (self.lo < 0.0 < 1.0 < self.hi):
            raise ValueError("grid must satisfy lo < 0 < 1 < hi")
        if self.n_points < 2:
            raise ValueError("grid needs at least two points")

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / (self.n_points - 1)

    @cached_property
    def points(self) -> np.ndarray:
        pts = np.linspace(self.lo, self.hi, self.n_points)
        pts.flags.writeable = False
        return pts

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        w.flags.writeable = False
        return w

    @property
    def symmetric_about_half(self) -> bool:
        return abs(self.lo + self.hi - 1.0) <= 1e-12


def l2_norm(values, grid: EvaluationGrid) -> float:
    """Trapezoid approximation of the L2 norm of a tabulated function."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_points,):
        raise ValueError("values do not match the grid")
    return math.sqrt(float(np.dot(grid.trapezoid_weights, values * values)))


def l2_distance(a, b, grid: EvaluationGrid) -> float:
    """Trapezoid approximation of the L2 distance between two tabulations."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (grid.n_points,) or b.shape != (grid.n_points,):
        raise ValueError("values do not match the grid")
    d = a - b
    return math.sqrt(float(np.dot(grid.trapezoid_weights, d * d)))


@dataclass(frozen=True)
class BandwidthGrid:
    """Decreasing bandwidth ladder 1, 1/2, ..., 1/levels.

    The ladder depth grows with the sample size: levels = floor(delta * m)
    clipped to [1, cap].  Ties in selection rules are broken toward the
    largest bandwidth, so values are kept sorted in decreasing order.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("bandwidth grid is empty")
        if any(v <= 0.0 for v in self.values):
            raise ValueError("bandwidths must be positive")
        if any(later >= earlier for later, earlier in zip(self.values[1:], self.values[:-1])):
            raise ValueError("bandwidths must be strictly decreasing")

    @classmethod
    def for_sample_size(cls, m: int, delta: float = DEFAULT_DELTA, cap: int = DEFAULT_CAP):
        if m < 1:
            raise ValueError("sample size must be at least 1")
        if not (0.0 < delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")
        if cap < 1:
            raise ValueError("cap must be at least 1")
        levels = max(1, min(int(math.floor(delta * m)), cap))
        return cls(tuple(1.0 / d for d in range(1, levels + 1)))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def smallest(self) -> float:
        return self.values[-1]

    @property
    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)
