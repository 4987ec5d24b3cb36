"""Kernel density estimation of the division fraction, with bandwidth selection.

Estimators consume the division fractions collected from one simulated
tree and tabulate densities on a fixed evaluation grid.  Bandwidth
selection offers four routes: a pairwise-comparison selector with a
tunable penalty multiplier, least-squares cross-validation, the normal
reference rule of thumb, and an oracle that sees the true density.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import gaussian_kde_grid
from .engine import GaussianTabulator
from .grids import DEFAULT_DELTA, BandwidthGrid, EvaluationGrid, l2_distance, l2_norm
from .kernels import GAUSS_TRUNC, SQRT_2PI, gaussian_kernel

DEFAULT_CHI_MARGIN = -0.68
ROT_CONSTANT = 1.06


@dataclass(eq=False)
class DensityEstimate:
    """A tabulated density estimate plus how it was obtained."""

    grid: EvaluationGrid
    values: np.ndarray
    bandwidth: float
    method: str
    sample_size: int
    symmetrized: bool = False
    diagnostics: dict = field(default_factory=dict)

    def l2_norm(self) -> float:
        return l2_norm(self.values, self.grid)

    def diagnostics_rows(self) -> list:
        """Per-ladder-level diagnostics as a list of dicts, possibly empty."""
        d = self.diagnostics
        if "ladder" not in d:
            return []
        rows = []
        for i, ell in enumerate(np.asarray(d["ladder"])):
            row = {"ell": float(ell)}
            if "deviation" in d:
                row["A"] = float(d["deviation"][i])
            if "penalty" in d:
                row["penalty"] = float(d["penalty"][i])
            if "objective" in d:
                row["objective"] = float(d["objective"][i])
            if "ise" in d:
                row["ise"] = float(d["ise"][i])
            rows.append(row)
        return rows

    def write_csv(self, path) -> None:
        """Write gamma,value rows plus a JSON sidecar with the metadata."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gamma", "value"])
            for x, v in zip(self.grid.points, self.values):
                writer.writerow([f"{x:.17g}", f"{v:.17g}"])
        meta = {
            "method": self.method,
            "bandwidth": self.bandwidth,
            "m_t": self.sample_size,
            "epsilon": self.diagnostics.get("chi_margin"),
            "delta": self.diagnostics.get("delta"),
            "symmetrized": self.symmetrized,
            "diagnostics": self.diagnostics_rows(),
        }
        with open(str(path) + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)


def _check_sample(gammas: np.ndarray, least: int = 1) -> np.ndarray:
    gammas = np.ascontiguousarray(gammas, dtype=float)
    if gammas.ndim != 1 or gammas.size < least:
        raise ValueError(f"need a 1d sample with at least {least} values")
    if np.any((gammas <= 0.0) | (gammas >= 1.0)):
        raise ValueError("division fractions must lie strictly inside (0, 1)")
    return gammas


def kde(
    gammas: np.ndarray,
    bandwidth: float,
    grid: EvaluationGrid,
    trunc: float = GAUSS_TRUNC,
) -> DensityEstimate:
    """Gaussian KDE at a fixed bandwidth, tabulated by direct summation."""
    gammas = _check_sample(gammas)
    values = gaussian_kde_grid(gammas, grid.lo, grid.dx, grid.n_points, float(bandwidth), trunc)
    return DensityEstimate(grid, values, float(bandwidth), "fixed", gammas.size)


def double_kde(
    gammas: np.ndarray,
    bandwidth: float,
    extra_bandwidth: float,
    grid: EvaluationGrid,
    via: str = "effective",
    trunc: float = GAUSS_TRUNC,
) -> DensityEstimate:
    """KDE smoothed twice, with Gaussian widths `bandwidth` then `extra_bandwidth`.

    via="effective" exploits that two Gaussian smoothings equal one at the
    root-sum-square width.  via="quadrature" performs the second smoothing
    as a trapezoid convolution on a padded grid; it is the generic route
    and is kept as an independent cross-check of the effective-width one.
    """
    gammas = _check_sample(gammas)
    b1, b2 = float(bandwidth), float(extra_bandwidth)
    if via == "effective":
        eff = math.hypot(b1, b2)
        est = kde(gammas, eff, grid, trunc)
        est.method = "double"
        est.diagnostics = {"bandwidths": [b1, b2], "via": via}
        return est
    if via != "quadrature":
        raise ValueError("via must be 'effective' or 'quadrature'")
    pad = int(math.ceil(trunc * b2 / grid.dx)) + 1
    n_ext = grid.n_points + 2 * pad
    inner = gaussian_kde_grid(gammas, grid.lo - pad * grid.dx, grid.dx, n_ext, b1, trunc)
    offsets = (np.arange(2 * pad + 1) - pad) * grid.dx
    kern = np.exp(-0.5 * (offsets / b2) ** 2) / (b2 * SQRT_2PI)
    values = np.convolve(inner, kern, mode="same")[pad : pad + grid.n_points] * grid.dx
    est = DensityEstimate(grid, values, math.hypot(b1, b2), "double", gammas.size)
    est.diagnostics = {"bandwidths": [b1, b2], "via": via}
    return est


# -- comparison selector ---------------------------------------------------


def comparison_penalties(ladder: BandwidthGrid, sample_size: int) -> np.ndarray:
    """Penalty term per ladder bandwidth: kernel L2 norm over sqrt(n * l)."""
    k2 = gaussian_kernel().l2_norm
    return k2 / np.sqrt(sample_size * ladder.as_array)


def deviation_matrix(
    gammas: np.ndarray,
    grid: EvaluationGrid,
    ladder: BandwidthGrid,
    trunc: float = GAUSS_TRUNC,
    pair_block: int = 512,
    tabulator: GaussianTabulator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """All pairwise comparison distances for the selector.

    Returns (tabs, dist): tabs[i] is the KDE row at ladder bandwidth i,
    dist[i, j] = || h_{e(i,j)} - h_j ||_2, where e(i, j) is the effective
    width of smoothing at bandwidth i then j.  The matrix depends on the
    sample and ladder only, so callers can rescan it under many penalty
    multipliers without retabulating.
    """
    gammas = _check_sample(gammas, least=2)
    tab = tabulator if tabulator is not None else GaussianTabulator(gammas, grid, trunc)
    values = ladder.as_array
    m = values.size
    tabs = tab.tabulate_out_batch(values)
    weights = grid.trapezoid_weights
    dist = np.zeros((m, m))
    pairs = [(i, j) for i in range(m) for j in range(i, m)]
    for start in range(0, len(pairs), pair_block):
        chunk = pairs[start : start + pair_block]
        eff = np.array([math.hypot(values[i], values[j]) for i, j in chunk])
        rows = tab.tabulate_out_batch(eff)
        for (i, j), row in zip(chunk, rows):
            diff = row - tabs[j]
            dist[i, j] = math.sqrt(float(weights @ (diff * diff)))
            if i != j:
                diff = row - tabs[i]
                dist[j, i] = math.sqrt(float(weights @ (diff * diff)))
    return tabs, dist


def comparison_objective(
    dist: np.ndarray, penalties: np.ndarray, chi_margin: float
) -> tuple[int, np.ndarray, np.ndarray]:
    """Scan a precomputed distance matrix at one penalty multiplier.

    Returns (best index, deviation part, full objective).  Ties pick the
    smallest index, i.e. the largest bandwidth of a decreasing ladder.
    """
    chi = (1.0 + chi_margin) * (1.0 + gaussian_kernel().l1_norm)
    slack = dist - chi * penalties[None, :]
    deviation = np.maximum(slack.max(axis=1), 0.0)
    objective = deviation + chi * penalties
    return int(np.argmin(objective)), deviation, objective


def gl_select(
    gammas: np.ndarray,
    grid: EvaluationGrid,
    chi_margin: float = DEFAULT_CHI_MARGIN,
    ladder: BandwidthGrid | None = None,
    trunc: float = GAUSS_TRUNC,
    tabulator: GaussianTabulator | None = None,
) -> DensityEstimate:
    """Pairwise-comparison bandwidth selection over the 1/k ladder."""
    gammas = _check_sample(gammas, least=2)
    if chi_margin <= -1.0:
        raise ValueError("penalty margin must exceed -1")
    delta = None
    if ladder is None:
        ladder = BandwidthGrid.for_sample_size(gammas.size)
        delta = DEFAULT_DELTA
    penalties = comparison_penalties(ladder, gammas.size)
    tabs, dist = deviation_matrix(gammas, grid, ladder, trunc, tabulator=tabulator)
    best, deviation, objective = comparison_objective(dist, penalties, chi_margin)
    est = DensityEstimate(grid, tabs[best].copy(), float(ladder.values[best]), "gl", gammas.size)
    est.diagnostics = {
        "ladder": ladder.values,
        "penalty": penalties,
        "deviation": deviation,
        "objective": objective,
        "chi_margin": chi_margin,
        "delta": delta,
        "bandwidth_index": best,
    }
    return est


# -- cross-validation ------------------------------------------------------


def cv_select(
    gammas: np.ndarray,
    grid: EvaluationGrid,
    ladder: BandwidthGrid | None = None,
    trunc: float = GAUSS_TRUNC,
    tabulator: GaussianTabulator | None = None,
) -> DensityEstimate:
    """Least-squares cross-validation over the same bandwidth ladder.

    The leave-one-out term needs every pairwise kernel evaluation; those
    double sums are computed in the frequency domain, so the cost is
    insensitive to the sample size.
    """
    gammas = _check_sample(gammas, least=2)
    if ladder is None:
        ladder = BandwidthGrid.for_sample_size(gammas.size)
    n = gammas.size
    tab = tabulator if tabulator is not None else GaussianTabulator(gammas, grid, trunc)
    tabs = tab.tabulate_out_batch(ladder.as_array)
    weights = grid.trapezoid_weights
    sq_int = (tabs * tabs) @ weights
    pair = tab.pair_sums(ladder.as_array)
    at_zero = 1.0 / (ladder.as_array * SQRT_2PI)
    loo = (pair - n * at_zero) / (n * (n - 1.0))
    objective = sq_int - 2.0 * loo
    best = int(np.argmin(objective))
    est = DensityEstimate(grid, tabs[best].copy(), float(ladder.values[best]), "cv", n)
    est.diagnostics = {"ladder": ladder.values, "objective": objective, "bandwidth_index": best}
    return est


# -- reference rule --------------------------------------------------------


def rot_bandwidth(gammas: np.ndarray) -> float:
    """Normal reference bandwidth 1.06 * sd * n^(-1/5)."""
    gammas = _check_sample(gammas, least=2)
    sd = float(np.std(gammas, ddof=1))
    if sd == 0.0:
        raise ValueError("sample variance is zero")
    return ROT_CONSTANT * sd * gammas.size ** (-0.2)


def rot_select(
    gammas: np.ndarray, grid: EvaluationGrid, trunc: float = GAUSS_TRUNC
) -> DensityEstimate:
    bw = rot_bandwidth(gammas)
    est = kde(gammas, bw, grid, trunc)
    est.method = "rot"
    return est


# -- parametric baseline -----------------------------------------------------


def mle_density(gammas: np.ndarray, grid: EvaluationGrid) -> DensityEstimate:
    """Parametric baseline: maximum-likelihood symmetric beta density.

    Only meaningful when the truth actually is a symmetric beta; kept as
    the reference the nonparametric estimators are judged against in that
    case.
    """
    from .betafit import beta_mle
    from .division import BetaKernel

    gammas = _check_sample(gammas, least=2)
    shape = beta_mle(gammas)
    values = BetaKernel(shape).density(grid.points)
    est = DensityEstimate(grid, values, math.nan, "mle", gammas.size)
    est.diagnostics = {"shape": shape}
    return est


# -- oracle ----------------------------------------------------------------


def ise_profile(
    gammas: np.ndarray,
    grid: EvaluationGrid,
    truth_values: np.ndarray,
    ladder: BandwidthGrid,
    trunc: float = GAUSS_TRUNC,
    tabulator: GaussianTabulator | None = None,
) -> np.ndarray:
    """Integrated squared error against the true density, per ladder level."""
    gammas = _check_sample(gammas)
    tab = tabulator if tabulator is not None else GaussianTabulator(gammas, grid, trunc)
    tabs = tab.tabulate_out_batch(ladder.values)
    diff = tabs - truth_values[None, :]
    return (diff * diff) @ grid.trapezoid_weights


def oracle_select(
    gammas: np.ndarray,
    grid: EvaluationGrid,
    truth_values: np.ndarray,
    ladder: BandwidthGrid | None = None,
    trunc: float = GAUSS_TRUNC,
) -> DensityEstimate:
    """Best ladder bandwidth by true integrated squared error."""
    gammas = _check_sample(gammas)
    if ladder is None:
        ladder = BandwidthGrid.for_sample_size(gammas.size)
    ise = ise_profile(gammas, grid, truth_values, ladder, trunc)
    best = int(np.argmin(ise))
    est = kde(gammas, float(ladder.values[best]), grid, trunc)
    est.method = "oracle"
    est.diagnostics = {"ladder": ladder.values, "ise": ise, "bandwidth_index": best}
    return est


# -- post-processing and error metrics --------------------------------------


def symmetrize_values(values: np.ndarray, grid: EvaluationGrid) -> np.ndarray:
    """Average a tabulation with its reflection about one half.

    Requires a grid symmetric about 0.5 so the reflection is an exact
    index reversal; applying it twice is a no-op.
    """
    if not grid.symmetric_about_half:
        raise ValueError("grid is not symmetric about 0.5")
    return 0.5 * (values + values[::-1])


def symmetrize(estimate: DensityEstimate) -> DensityEstimate:
    out = DensityEstimate(
        estimate.grid,
        symmetrize_values(estimate.values, estimate.grid),
        estimate.bandwidth,
        estimate.method,
        estimate.sample_size,
        symmetrized=True,
        diagnostics=dict(estimate.diagnostics),
    )
    return out


def relative_error(values: np.ndarray, truth_values: np.ndarray, grid: EvaluationGrid) -> float:
    """L2 distance to the truth over the L2 norm of the truth."""
    denom = l2_norm(truth_values, grid)
    if denom == 0.0:
        raise ValueError("reference density has zero norm")
    return l2_distance(values, truth_values, grid) / denom


def estimate_l2_distance(a: DensityEstimate, b: DensityEstimate) -> float:
    """Trapezoid L2 distance between two estimates on one shared grid."""
    if a.grid != b.grid:
        raise ValueError("estimates live on different grids")
    return l2_distance(a.values, b.values, a.grid)
