"""Monte Carlo experiments: error tables, penalty calibration, rate fits,
and mean-age statistics.

Every experiment derives its replicate streams from a master seed with a
structured spawn key, so results are reproducible bit for bit and
replicates can run in parallel without sharing generator state.  The
penalty calibration reuses one set of simulations across all penalty
margins (common random numbers), which is what makes its minimum visible
at a hundred replicates.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .division import BetaKernel
from .engine import GaussianTabulator
from .estimate import (
    DEFAULT_CHI_MARGIN,
    comparison_objective,
    comparison_penalties,
    cv_select,
    deviation_matrix,
    gl_select,
    ise_profile,
    mle_density,
    relative_error,
    rot_select,
    symmetrize_values,
)
from .grids import BandwidthGrid, EvaluationGrid, l2_norm
from .simulate import SimConfig, mean_age_series, rng_for, simulate

KNOWN_METHODS = ("gl", "gl_sym", "cv", "rot", "oracle", "mle")
MAX_REDRAWS = 100


@dataclass(frozen=True)
class McConfig:
    """Shared setup of the table experiments."""

    model: object
    horizons: tuple
    methods: tuple = ("gl", "cv", "rot", "oracle", "mle")
    replicates: int = 100
    rate: float = 0.5
    n0: int = 1
    alpha: float = 0.35
    chi_margin: float = DEFAULT_CHI_MARGIN
    seed: int = 20260501
    threads: int = 1

    def __post_init__(self):
        bad = [m for m in self.methods if m not in KNOWN_METHODS]
        if bad:
            raise ValueError(f"unknown methods: {bad}")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if not self.horizons:
            raise ValueError("need at least one horizon")


@dataclass
class McRow:
    horizon: float
    method: str
    mean_error: float
    sd_error: float
    mean_bandwidth: float
    mean_sample: float


@dataclass
class McReport:
    """Aggregated and per-replicate results of a table experiment."""

    rows: list
    errors: dict = field(default_factory=dict)  # (horizon, method) -> per-replicate array
    bandwidths: dict = field(default_factory=dict)
    sample_sizes: dict = field(default_factory=dict)  # horizon -> per-replicate array

    def row(self, horizon: float, method: str) -> McRow:
        for r in self.rows:
            if r.horizon == horizon and r.method == method:
                return r
        raise KeyError((horizon, method))

    def write_table_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["T", "method", "e_bar", "sigma_e", "ell_bar"])
            for r in self.rows:
                writer.writerow(
                    [
                        f"{r.horizon:.17g}",
                        r.method,
                        f"{r.mean_error:.17g}",
                        f"{r.sd_error:.17g}",
                        f"{r.mean_bandwidth:.17g}",
                    ]
                )

    def write_replicates_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["T", "method", "replicate", "error", "bandwidth", "m_t"])
            for (horizon, method), errs in sorted(self.errors.items()):
                bws = self.bandwidths[(horizon, method)]
                sizes = self.sample_sizes[horizon]
                for i, (e, b) in enumerate(zip(errs, bws)):
                    writer.writerow(
                        [f"{horizon:.17g}", method, i, f"{e:.17g}", f"{b:.17g}", int(sizes[i])]
                    )


def draw_fractions(model, sim: SimConfig, seed: int, t_idx: int, replicate: int) -> np.ndarray:
    """Simulate one tree and return its division fractions.

    Trees with fewer than two divisions cannot feed any selector; those
    replicates are redrawn from a fresh substream (same structured key,
    bumped attempt index) so the replicate count stays fixed.
    """
    for attempt in range(MAX_REDRAWS):
        rng = rng_for(seed, t_idx, replicate, attempt)
        traj = simulate(model, sim, rng=rng)
        if traj.fractions.size >= 2:
            return traj.fractions
    raise RuntimeError("replicate kept producing fewer than two divisions")


def _union_ladder(sample_sizes: Sequence[int]) -> BandwidthGrid:
    depth = max(len(BandwidthGrid.for_sample_size(int(m))) for m in sample_sizes)
    return BandwidthGrid(tuple(1.0 / k for k in range(1, depth + 1)))


def _replicate_metrics(args) -> dict:
    """All per-replicate work for one horizon: simulate, estimate, score."""
    (model, sim, seed, t_idx, r, methods, chi_margin, grid, truth) = args
    gammas = draw_fractions(model, sim, seed, t_idx, r)
    tab = GaussianTabulator(gammas, grid)
    out: dict = {"m": gammas.size, "err": {}, "bw": {}}
    need_gl = "gl" in methods or "gl_sym" in methods
    if need_gl:
        est = gl_select(gammas, grid, chi_margin, tabulator=tab)
        if "gl" in methods:
            out["err"]["gl"] = relative_error(est.values, truth, grid)
            out["bw"]["gl"] = est.bandwidth
        if "gl_sym" in methods:
            sym = symmetrize_values(est.values, grid)
            out["err"]["gl_sym"] = relative_error(sym, truth, grid)
            out["bw"]["gl_sym"] = est.bandwidth
    if "cv" in methods:
        est = cv_select(gammas, grid, tabulator=tab)
        out["err"]["cv"] = relative_error(est.values, truth, grid)
        out["bw"]["cv"] = est.bandwidth
    if "rot" in methods:
        est = rot_select(gammas, grid)
        out["err"]["rot"] = relative_error(est.values, truth, grid)
        out["bw"]["rot"] = est.bandwidth
    if "mle" in methods:
        est = mle_density(gammas, grid)
        out["err"]["mle"] = relative_error(est.values, truth, grid)
        out["bw"]["mle"] = math.nan
    if "oracle" in methods:
        # same ladder the data-driven selectors search, so the oracle error
        # bounds theirs from below replicate by replicate
        ladder = BandwidthGrid.for_sample_size(gammas.size)
        ise = ise_profile(gammas, grid, truth, ladder, tabulator=tab)
        best = int(np.argmin(ise))
        out["err"]["oracle"] = math.sqrt(float(ise[best])) / l2_norm(truth, grid)
        out["bw"]["oracle"] = float(ladder.values[best])
    return out


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_mise_experiment(cfg: McConfig, grid: Optional[EvaluationGrid] = None) -> McReport:
    """Replicated relative-error table across horizons and methods.

    The oracle column picks, per replicate, the ladder bandwidth with the
    smallest true integrated squared error, so its mean error is a floor
    for every selector searching the same ladder.
    """
    if grid is None:
        grid = EvaluationGrid()
    truth = cfg.model.density(grid.points)
    report = McReport(rows=[])
    for t_idx, horizon in enumerate(cfg.horizons):
        sim = SimConfig(rate=cfg.rate, horizon=float(horizon), n0=cfg.n0, alpha=cfg.alpha)
        args = [
            (cfg.model, sim, cfg.seed, t_idx, r, cfg.methods, cfg.chi_margin, grid, truth)
            for r in range(cfg.replicates)
        ]
        results = _map(_replicate_metrics, args, cfg.threads)
        report.sample_sizes[float(horizon)] = np.array([res["m"] for res in results])
        for method in cfg.methods:
            errs = np.array([res["err"][method] for res in results])
            bws = np.array([res["bw"][method] for res in results])
            report.errors[(float(horizon), method)] = errs
            report.bandwidths[(float(horizon), method)] = bws
            finite_bw = bws[np.isfinite(bws)]
            report.rows.append(
                McRow(
                    horizon=float(horizon),
                    method=method,
                    mean_error=float(errs.mean()),
                    # population-style denominator: sd over exactly the M replicates run
                    sd_error=float(errs.std(ddof=0)),
                    mean_bandwidth=float(finite_bw.mean()) if finite_bw.size else math.nan,
                    mean_sample=float(np.mean(report.sample_sizes[float(horizon)])),
                )
            )
    return report


def run_symmetrized_experiment(cfg: McConfig, grid: Optional[EvaluationGrid] = None) -> McReport:
    """Paired raw-vs-symmetrized comparison on identical trees."""
    paired = McConfig(
        model=cfg.model,
        horizons=cfg.horizons,
        methods=("gl", "gl_sym"),
        replicates=cfg.replicates,
        rate=cfg.rate,
        n0=cfg.n0,
        alpha=cfg.alpha,
        chi_margin=cfg.chi_margin,
        seed=cfg.seed,
        threads=cfg.threads,
    )
    return run_mise_experiment(paired, grid)


# -- penalty margin calibration ----------------------------------------------


@dataclass
class EpsilonRow:
    epsilon: float
    mise: float
    mean_error: float
    sd_error: float
    mean_bandwidth: float
    mean_gap: float  # mean(selected - oracle bandwidth)


@dataclass
class EpsilonReport:
    rows: list
    oracle_bandwidth: float
    sample_digest: str  # hash over every replicate's fractions

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epsilon", "mise", "e_bar", "sigma_e", "ell_bar", "gap"])
            for r in self.rows:
                writer.writerow(
                    [
                        f"{r.epsilon:.17g}",
                        f"{r.mise:.17g}",
                        f"{r.mean_error:.17g}",
                        f"{r.sd_error:.17g}",
                        f"{r.mean_bandwidth:.17g}",
                        f"{r.mean_gap:.17g}",
                    ]
                )


def _calibration_worker(args) -> dict:
    (model, sim, seed, r, grid, truth, union) = args
    gammas = draw_fractions(model, sim, seed, 0, r)
    tab = GaussianTabulator(gammas, grid)
    ladder = BandwidthGrid.for_sample_size(gammas.size)
    tabs, dist = deviation_matrix(gammas, grid, ladder, tabulator=tab)
    weights = grid.trapezoid_weights
    diffs = tabs - truth[None, :]
    sq_err = (diffs * diffs) @ weights  # ISE at each ladder level
    return {
        "digest": hashlib.sha256(gammas.tobytes()).hexdigest(),
        "ladder": ladder,
        "dist": dist,
        "sq_err": sq_err,
        "ise_union": ise_profile(gammas, grid, truth, union, tabulator=tab),
        "m": gammas.size,
    }


def calibrate_epsilon(
    cfg: McConfig,
    epsilons: Sequence[float],
    grid: Optional[EvaluationGrid] = None,
) -> EpsilonReport:
    """Scan the penalty margin over a shared set of simulated trees.

    Simulations, tabulations, and pairwise distances are computed once;
    each margin only rescans the distance matrices, so differences across
    margins are purely due to the margin (common random numbers).
    """
    if grid is None:
        grid = EvaluationGrid()
    if len(cfg.horizons) != 1:
        raise ValueError("calibration runs at a single horizon")
    if any(eps <= -1.0 for eps in epsilons):
        raise ValueError("every penalty margin must exceed -1")
    truth = cfg.model.density(grid.points)
    truth_norm = l2_norm(truth, grid)
    sim = SimConfig(rate=cfg.rate, horizon=float(cfg.horizons[0]), n0=cfg.n0, alpha=cfg.alpha)
    sizes = [
        draw_fractions(cfg.model, sim, cfg.seed, 0, r).size for r in range(cfg.replicates)
    ]
    union = _union_ladder(sizes)
    args = [
        (cfg.model, sim, cfg.seed, r, grid, truth, union) for r in range(cfg.replicates)
    ]
    results = _map(_calibration_worker, args, cfg.threads)

    ise = np.vstack([res["ise_union"] for res in results])
    oracle_idx = int(np.argmin(ise.mean(axis=0)))
    oracle_bw = float(union.values[oracle_idx])

    digest = hashlib.sha256()
    for res in results:
        digest.update(res["digest"].encode())

    rows = []
    for eps in epsilons:
        errs = np.empty(cfg.replicates)
        bws = np.empty(cfg.replicates)
        for r, res in enumerate(results):
            pen = comparison_penalties(res["ladder"], res["m"])
            best, _, _ = comparison_objective(res["dist"], pen, float(eps))
            errs[r] = math.sqrt(res["sq_err"][best]) / truth_norm
            bws[r] = res["ladder"].values[best]
        rows.append(
            EpsilonRow(
                epsilon=float(eps),
                mise=float(np.mean(errs**2)),
                mean_error=float(errs.mean()),
                sd_error=float(errs.std(ddof=0)),
                mean_bandwidth=float(bws.mean()),
                mean_gap=float(np.mean(bws - oracle_bw)),
            )
        )
    return EpsilonReport(rows=rows, oracle_bandwidth=oracle_bw, sample_digest=digest.hexdigest())


# -- convergence rate ---------------------------------------------------------


@dataclass
class RateFit:
    points: list  # (horizon, mean error)
    slope: float
    intercept: float
    theoretical_slope: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["T", "e_bar", "slope", "intercept", "theoretical_slope"])
            for t, e in self.points:
                writer.writerow(
                    [
                        f"{t:.17g}",
                        f"{e:.17g}",
                        f"{self.slope:.17g}",
                        f"{self.intercept:.17g}",
                        f"{self.theoretical_slope:.17g}",
                    ]
                )


def theoretical_rate_slope(smoothness: float, rate: float) -> float:
    """Error decay exponent in the horizon for a density of given smoothness."""
    return -smoothness * rate / (2.0 * smoothness + 1.0)


def fit_rate(
    horizons: Sequence[float],
    mean_errors: Sequence[float],
    smoothness: float = 1.0,
    rate: float = 0.5,
) -> RateFit:
    """Least squares of log mean error on the horizon."""
    t = np.asarray(horizons, dtype=float)
    e = np.asarray(mean_errors, dtype=float)
    if t.size != e.size or t.size < 2:
        raise ValueError("need at least two (horizon, error) points")
    slope, intercept = np.polyfit(t, np.log(e), 1)
    return RateFit(
        points=list(zip(t.tolist(), e.tolist())),
        slope=float(slope),
        intercept=float(intercept),
        theoretical_slope=theoretical_rate_slope(smoothness, rate),
    )


# -- mean age ------------------------------------------------------------------


@dataclass
class MeanAgeReport:
    shapes: list  # beta shape parameter per block
    times: np.ndarray
    means: dict  # shape -> per-time mean over trees
    q25: dict
    q75: dict
    spread: dict  # shape -> time-averaged interquartile range

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["a", "time", "mean_age", "q25", "q75"])
            for a in self.shapes:
                for j, t in enumerate(self.times):
                    writer.writerow(
                        [
                            f"{a:.17g}",
                            f"{t:.17g}",
                            f"{self.means[a][j]:.17g}",
                            f"{self.q25[a][j]:.17g}",
                            f"{self.q75[a][j]:.17g}",
                        ]
                    )

    def write_spread_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["a", "mean_iqr"])
            for a in self.shapes:
                writer.writerow([f"{a:.17g}", f"{self.spread[a]:.17g}"])


def default_age_times() -> np.ndarray:
    """Snapshot grid 6, 6.36, ..., 24."""
    return 6.0 + 0.36 * np.arange(51)


def _age_worker(args) -> np.ndarray:
    (shape, sim, seed, a_idx, tree, times) = args
    traj = simulate(BetaKernel(shape), sim, rng=rng_for(seed, a_idx, tree))
    return mean_age_series(traj, times)


def run_mean_age_experiment(
    shapes: Sequence[float],
    n_trees: int = 50,
    times: Optional[np.ndarray] = None,
    rate: float = 0.4,
    alpha: float = 0.45,
    n0: int = 1,
    founder_toxicity: float = 1.0,
    seed: int = 20260501,
    threads: int = 1,
) -> MeanAgeReport:
    """Mean-age trajectories and quartile spreads per division-law shape.

    More concentrated split laws (larger beta shape) divide toxicity more
    evenly, which narrows the spread of the mean-age path across trees.
    """
    if n_trees < 2:
        raise ValueError("quartiles need at least two trees")
    if times is None:
        times = default_age_times()
    times = np.asarray(times, dtype=float)
    report = MeanAgeReport(
        shapes=[float(a) for a in shapes], times=times, means={}, q25={}, q75={}, spread={}
    )
    for a_idx, shape in enumerate(report.shapes):
        sim = SimConfig(
            rate=rate,
            horizon=float(times.max()),
            n0=n0,
            alpha=alpha,
            founder_toxicity=founder_toxicity,
        )
        args = [(shape, sim, seed, a_idx, tree, times) for tree in range(n_trees)]
        paths = np.vstack(_map(_age_worker, args, threads))
        report.means[shape] = paths.mean(axis=0)
        report.q25[shape] = np.quantile(paths, 0.25, axis=0)
        report.q75[shape] = np.quantile(paths, 0.75, axis=0)
        report.spread[shape] = float(np.mean(report.q75[shape] - report.q25[shape]))
    return report
