"""Division fraction laws: the distributions a mother's toxicity is split by.

Each model provides a density on (0, 1) and a sampler.  Samplers draw with
a gamma-variate ratio construction so that a fixed generator state yields
the same fractions on every platform.  Draws exactly equal to 0 or 1 are
rejected and redrawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_MAX_REDRAW_ROUNDS = 100


def _reject_boundary(draw_fn, size: int) -> np.ndarray:
    """Run draw_fn until all variates fall strictly inside (0, 1)."""
    out = draw_fn(size)
    bad = ~((out > 0.0) & (out < 1.0))
    rounds = 0
    while np.any(bad):
        rounds += 1
        if rounds > _MAX_REDRAW_ROUNDS:
            raise RuntimeError("division fraction sampler failed to produce interior draws")
        out[bad] = draw_fn(int(bad.sum()))
        bad = ~((out > 0.0) & (out < 1.0))
    return out


def _beta_ratio(rng: np.random.Generator, a, b, size: int) -> np.ndarray:
    g1 = rng.standard_gamma(a, size)
    g2 = rng.standard_gamma(b, size)
    with np.errstate(invalid="ignore"):
        return g1 / (g1 + g2)


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


@dataclass(frozen=True)
class BetaKernel:
    """Symmetric Beta(a, a) split law."""

    a: float

    def __post_init__(self):
        if self.a <= 0.0:
            raise ValueError("beta shape must be positive")

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = (x > 0.0) & (x < 1.0)
        xi = x[inside]
        log_c = _log_beta(self.a, self.a)
        out[inside] = np.exp((self.a - 1.0) * (np.log(xi) + np.log1p(-xi)) - log_c)
        if self.a < 1.0:
            out[(x == 0.0) | (x == 1.0)] = np.inf
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return _reject_boundary(lambda m: _beta_ratio(rng, self.a, self.a, m), size)

    def mean(self) -> float:
        return 0.5

    def variance(self) -> float:
        return 1.0 / (4.0 * (2.0 * self.a + 1.0))

    def describe(self) -> str:
        return f"beta(a={self.a:g})"


@dataclass(frozen=True)
class BetaMixtureKernel:
    """Two-component beta mixture w * Beta(a1, b1) + (1 - w) * Beta(a2, b2).

    With weight 1/2 and mirrored shape pairs this gives a symmetric bimodal
    split law.
    """

    weight: float
    a1: float
    b1: float
    a2: float
    b2: float

    def __post_init__(self):
        if not (0.0 < self.weight < 1.0):
            raise ValueError("mixture weight must lie in (0, 1)")
        if min(self.a1, self.b1, self.a2, self.b2) <= 0.0:
            raise ValueError("beta shapes must be positive")

    def _component_density(self, x: np.ndarray, a: float, b: float) -> np.ndarray:
        out = np.zeros_like(x)
        inside = (x > 0.0) & (x < 1.0)
        xi = x[inside]
        out[inside] = np.exp(
            (a - 1.0) * np.log(xi) + (b - 1.0) * np.log1p(-xi) - _log_beta(a, b)
        )
        if a < 1.0:
            out[x == 0.0] = np.inf
        if b < 1.0:
            out[x == 1.0] = np.inf
        return out

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.weight * self._component_density(x, self.a1, self.b1) + (
            1.0 - self.weight
        ) * self._component_density(x, self.a2, self.b2)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        def draw(m: int) -> np.ndarray:
            first = rng.random(m) < self.weight
            a = np.where(first, self.a1, self.a2)
            b = np.where(first, self.b1, self.b2)
            return _beta_ratio(rng, a, b, m)

        return _reject_boundary(draw, size)

    def mean(self) -> float:
        m1 = self.a1 / (self.a1 + self.b1)
        m2 = self.a2 / (self.a2 + self.b2)
        return self.weight * m1 + (1.0 - self.weight) * m2

    def variance(self) -> float:
        def moment2(a: float, b: float) -> float:
            m = a / (a + b)
            v = a * b / ((a + b) ** 2 * (a + b + 1.0))
            return v + m * m

        second = self.weight * moment2(self.a1, self.b1) + (1.0 - self.weight) * moment2(
            self.a2, self.b2
        )
        return second - self.mean() ** 2

    def describe(self) -> str:
        return (
            f"mixture(w={self.weight:g}, beta({self.a1:g},{self.b1:g}), "
            f"beta({self.a2:g},{self.b2:g}))"
        )


@dataclass(frozen=True)
class TabulatedKernel:
    """Split law given by a piecewise linear density on a user grid.

    The tabulation must integrate to 1 (trapezoid rule) within 1e-9.
    Sampling inverts the piecewise quadratic distribution function exactly,
    so the drawn law is the tabulated density itself.
    """

    grid: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.size < 2 or v.shape != g.shape:
            raise ValueError("grid and values must be 1d arrays of equal length >= 2")
        if np.any(np.diff(g) <= 0.0):
            raise ValueError("tabulation grid must be strictly increasing")
        if g[0] < 0.0 or g[-1] > 1.0:
            raise ValueError("tabulation grid must lie within [0, 1]")
        if np.any(v < 0.0):
            raise ValueError("tabulated density values must be nonnegative")
        total = float(np.trapezoid(v, g))
        if abs(total - 1.0) > 1e-9:
            raise ValueError("tabulated density must integrate to 1 within 1e-9")

    @classmethod
    def from_arrays(cls, grid: Sequence[float], values: Sequence[float]) -> "TabulatedKernel":
        return cls(tuple(float(x) for x in grid), tuple(float(x) for x in values))

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        out = np.interp(x, g, v, left=0.0, right=0.0)
        # Renormalize away the residual trapezoid defect so downstream
        # integrals see a law of total mass exactly 1.
        return out / float(np.trapezoid(v, g))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        widths = np.diff(g)
        cell_mass = 0.5 * (v[:-1] + v[1:]) * widths
        cdf = np.concatenate(([0.0], np.cumsum(cell_mass)))
        total = cdf[-1]

        def draw(m: int) -> np.ndarray:
            u = rng.random(m) * total
            k = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, widths.size - 1)
            c = u - cdf[k]
            v0 = v[k]
            slope = (v[k + 1] - v[k]) / widths[k]
            disc = np.sqrt(np.maximum(v0 * v0 + 2.0 * slope * c, 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(disc + v0 > 0.0, 2.0 * c / (v0 + disc), 0.0)
            return g[k] + np.minimum(t, widths[k])

        return _reject_boundary(draw, size)

    def mean(self) -> float:
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        return float(np.trapezoid(g * v, g) / np.trapezoid(v, g))

    def describe(self) -> str:
        return f"tabulated({len(self.grid)} knots)"


def is_symmetric(model, probes: int = 2001, tol: float = 1e-9) -> bool:
    """Check h(x) == h(1 - x) on a probe grid inside (0, 1)."""
    x = np.linspace(0.0, 1.0, probes)[1:-1]
    d = model.density(x) - model.density(1.0 - x)
    return bool(np.max(np.abs(d)) <= tol)


def sample_division_fraction(model, rng: np.random.Generator, size=None):
    """Draw division fractions from a model; scalar when size is None."""
    if size is None:
        return float(model.sample(rng, 1)[0])
    return model.sample(rng, int(size))
