"""Smoothing kernel descriptions used by the density estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Gaussian values beyond this many standard deviations are at most
# exp(-8.5**2 / 2) ~ 2.05e-16 of the peak and are treated as zero by the
# tabulation routines.
GAUSS_TRUNC = 8.5


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric smoothing kernel with the constants selectors need.

    evaluate maps an offset array to kernel values at bandwidth 1.
    self_convolution, when present, maps bandwidths (l, lp) to the single
    bandwidth at which K_l * K_lp equals the kernel again; fourier, when
    present, is the transform w -> int K(x) exp(-iwx) dx and unlocks the
    fast tabulation paths.
    """

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    l1_norm: float
    l2_norm: float
    self_convolution: Optional[Callable[[float, float], float]] = None
    fourier: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # Radius, in bandwidth units, beyond which the kernel is negligible.
    support_radius: float = GAUSS_TRUNC
    # Moment order: smallest j >= 1 with a nonvanishing j-th moment.
    order: float = 2.0

    def scaled(self, x, bandwidth: float) -> np.ndarray:
        """Evaluate K_l(x) = K(x / l) / l."""
        if bandwidth <= 0.0:
            raise ValueError("bandwidth must be positive")
        x = np.asarray(x, dtype=float)
        return self.evaluate(x / bandwidth) / bandwidth

    @property
    def peak(self) -> float:
        return float(self.evaluate(np.array([0.0]))[0])


def _gaussian(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * x * x) / SQRT_2PI


def gaussian_kernel() -> KernelSpec:
    """Standard Gaussian kernel.

    L1 norm 1, L2 norm 2**-0.5 * pi**-0.25, and the self convolution rule
    K_l * K_lp = K_sqrt(l^2 + lp^2).
    """
    return KernelSpec(
        name="gaussian",
        evaluate=_gaussian,
        l1_norm=1.0,
        l2_norm=2.0 ** -0.5 * math.pi ** -0.25,
        self_convolution=math.hypot,
        fourier=lambda w: np.exp(-0.5 * np.asarray(w, dtype=float) ** 2),
        support_radius=GAUSS_TRUNC,
        order=2.0,
    )
