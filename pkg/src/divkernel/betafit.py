"""Maximum likelihood fit of a symmetric Beta(a, a) law.

digamma and trigamma are computed with the classic recipe: shift the
argument upward with the recurrence until the asymptotic series applies,
then subtract the recurrence terms back out.
"""

from __future__ import annotations

import math

import numpy as np

_ASYMPTOTIC_CUTOFF = 10.0

# Coefficients of the asymptotic expansion psi(x) ~ ln x - 1/(2x) - sum c_k / x^(2k),
# c_k = B_{2k} / (2k) with Bernoulli numbers B_{2k}.
_DIGAMMA_TAIL = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

# psi'(x) ~ 1/x + 1/(2x^2) + sum B_{2k} / x^(2k+1).
_TRIGAMMA_TAIL = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)


def digamma(x: float) -> float:
    if x <= 0.0:
        raise ValueError("digamma implemented for positive arguments only")
    shift = 0.0
    while x < _ASYMPTOTIC_CUTOFF:
        shift += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = 0.0
    power = inv2
    for c in _DIGAMMA_TAIL:
        tail += c * power
        power *= inv2
    return math.log(x) - 0.5 / x - tail - shift


def trigamma(x: float) -> float:
    if x <= 0.0:
        raise ValueError("trigamma implemented for positive arguments only")
    shift = 0.0
    while x < _ASYMPTOTIC_CUTOFF:
        shift += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    tail = 0.0
    power = inv * inv2
    for c in _TRIGAMMA_TAIL:
        tail += c * power
        power *= inv2
    return inv + 0.5 * inv2 + tail + shift


def _score_mean(a: float) -> float:
    """Model value of E[ln g + ln(1 - g)] under Beta(a, a)."""
    return 2.0 * (digamma(a) - digamma(2.0 * a))


def _score_mean_derivative(a: float) -> float:
    return 2.0 * trigamma(a) - 4.0 * trigamma(2.0 * a)


def beta_mle(
    gammas,
    bracket: tuple[float, float] = (1e-3, 1e3),
    tol: float = 1e-8,
    max_iter: int = 200,
) -> float:
    """Fit the shape of a symmetric Beta(a, a) law by maximum likelihood.

    Solves the score equation mean(ln g + ln(1-g)) = 2(psi(a) - psi(2a))
    with Newton steps safeguarded by bisection inside the bracket.  The
    left side is strictly below ln(1/4) for any nondegenerate sample and
    the right side increases from -inf to ln(1/4), so the root is unique
    when it lies inside the bracket.
    """
    g = np.asarray(gammas, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise ValueError("need a 1d sample with at least two observations")
    if np.any((g <= 0.0) | (g >= 1.0)):
        raise ValueError("observations must lie strictly inside (0, 1)")
    target = float(np.mean(np.log(g) + np.log1p(-g)))

    lo, hi = bracket
    if not (0.0 < lo < hi):
        raise ValueError("invalid bracket")

    def score(a: float) -> float:
        return target - _score_mean(a)

    s_lo = score(lo)
    s_hi = score(hi)
    if s_lo < 0.0 or s_hi > 0.0:
        # score decreases in a; a sign change inside the bracket is required
        if s_lo < 0.0:
            raise RuntimeError("beta fit: root below the lower bracket edge")
        raise RuntimeError("beta fit: root above the upper bracket edge")

    a = math.sqrt(lo * hi)
    for _ in range(max_iter):
        s = score(a)
        if abs(s) < tol:
            return a
        if s > 0.0:
            lo = a
        else:
            hi = a
        step = s / _score_mean_derivative(a)
        candidate = a + step
        if not (lo < candidate < hi) or not math.isfinite(candidate):
            candidate = 0.5 * (lo + hi)
        a = candidate
    raise RuntimeError(f"beta fit did not reach |score| < {tol:g} in {max_iter} iterations")
