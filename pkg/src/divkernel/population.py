"""Closed forms for the population size of a constant-rate binary fission process.

Starting from n0 cells, each cell divides independently at rate R, so the
population at time T follows a negative binomial law supported on
{n0, n0 + 1, ...} with success probability p = exp(-R T).  All functions
here are pure and safe to call from worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

_SERIES_TOL = 1e-12
_SERIES_MAX_TERMS = 10_000_000
_SERIES_BLOCK = 4096


@dataclass(frozen=True)
class PopulationLaw:
    """Law of the population count N_T for a cell system of n0 founders."""

    n0: int
    rate: float
    horizon: float

    def __post_init__(self):
        if self.n0 < 1:
            raise ValueError("n0 must be at least 1")
        if self.rate <= 0.0:
            raise ValueError("division rate must be positive")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")

    @property
    def p(self) -> float:
        """Success probability exp(-R T), always inside (0, 1)."""
        return math.exp(-self.rate * self.horizon)

    def pmf(self, n) -> np.ndarray:
        """P(N_T = n); zero below the founder count rather than an error."""
        n = np.asarray(n)
        if not np.issubdtype(n.dtype, np.integer):
            raise ValueError("population counts must be integers")
        n = n.astype(np.int64)
        p = self.p
        out = np.zeros(n.shape, dtype=float)
        ok = n >= self.n0
        nk = n[ok].astype(float)
        log_pmf = (
            gammaln(nk)
            - gammaln(nk - self.n0 + 1.0)
            - gammaln(float(self.n0))
            + self.n0 * math.log(p)
            + (nk - self.n0) * math.log1p(-p)
        )
        out[ok] = np.exp(log_pmf)
        return out

    def mean(self) -> float:
        return self.n0 * math.exp(self.rate * self.horizon)

    def mean_new_cells(self) -> float:
        """Expected number of divisions by the horizon, E[N_T] - n0."""
        return self.mean() - self.n0

    def inv_mean(self, tol: float = _SERIES_TOL) -> float:
        """E[1/N_T].

        Uses the exact geometric closed form for a single founder.  For
        n0 > 1 the series sum_{n >= n0} pmf(n)/n is accumulated until the
        geometric tail bound drops below tol; the alternating closed form
        is avoided because its terms grow like exp((n0-1) R T) and cancel
        catastrophically.
        """
        rt = self.rate * self.horizon
        p = self.p
        if self.n0 == 1:
            return rt * p / (1.0 - p)

        total = 0.0
        n_lo = self.n0
        ratio_limit = 1.0 - p
        while True:
            if n_lo - self.n0 > _SERIES_MAX_TERMS:
                raise RuntimeError("population series did not converge within the term cap")
            n = np.arange(n_lo, n_lo + _SERIES_BLOCK, dtype=np.int64)
            probs = self.pmf(n)
            total += float(np.sum(probs / n))
            n_hi = int(n[-1])
            # pmf(n+1)/pmf(n) = (1-p) n / (n+1-n0) decreases toward 1-p, so
            # the tail after n_hi is bounded by a geometric series.
            ratio = ratio_limit * (n_hi + 1.0) / (n_hi + 2.0 - self.n0)
            if 0.0 < ratio < 1.0:
                tail = probs[-1] * ratio / (1.0 - ratio) / (n_hi + 1.0)
                if tail < tol:
                    return total
            n_lo = n_hi + 1

    def inv_mean_alternating(self) -> float:
        """E[1/N_T] for n0 > 1 through the alternating closed form.

        Kept as a cross check for small n0 * R * T only: the summands are
        of order exp((n0 - 1) R T), so the cancellation destroys accuracy
        long before the series route loses any.
        """
        if self.n0 == 1:
            return self.inv_mean()
        rt = self.rate * self.horizon
        p = self.p
        # expm1 keeps each summand O(k rt) instead of O(1) when rt is small
        acc = rt
        for k in range(1, self.n0):
            acc += math.comb(self.n0 - 1, k) * (-1.0) ** k * math.expm1(k * rt) / k
        return (p / (1.0 - p)) ** self.n0 * (-1.0) ** (self.n0 - 1) * acc

    def inv_mean_bounds(self) -> tuple[float, float]:
        """(lower, upper) envelope for E[1/N_T].

        The lower bound exp(-R T)/n0 always holds; the upper bound
        exp(-R T)/(n0 - 1) needs at least two founders and is reported as
        infinity otherwise.
        """
        lower = self.p / self.n0
        upper = self.p / (self.n0 - 1) if self.n0 > 1 else math.inf
        return lower, upper

    def rate_factor(self) -> float:
        """Normalizing factor that sets the estimation error scale at T.

        Equals R T exp(-R T) / (1 - exp(-R T)) for one founder (the exact
        E[1/N_T]) and exp(-R T) otherwise.
        """
        rt = self.rate * self.horizon
        p = self.p
        if self.n0 == 1:
            return rt * p / (1.0 - p)
        return p


@dataclass(frozen=True)
class AuxiliaryLaw:
    """Mean of the size-biased tagged-cell toxicity process.

    The tagged value decays toward the equilibrium alpha/R at speed R:
    E[Y_t] = (y0 - alpha/R) exp(-R t) + alpha/R.
    """

    y0: float
    alpha: float
    rate: float

    def __post_init__(self):
        if self.rate <= 0.0:
            raise ValueError("division rate must be positive")
        if self.alpha < 0.0:
            raise ValueError("growth rate must be nonnegative")

    def mean(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        eq = self.alpha / self.rate
        return (self.y0 - eq) * np.exp(-self.rate * t) + eq

    @property
    def equilibrium(self) -> float:
        return self.alpha / self.rate
