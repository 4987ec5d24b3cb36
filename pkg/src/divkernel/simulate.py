"""Event-driven simulation of a binary-fission population with toxicity.

Every living cell divides at a constant rate, so the time between
successive division events in a population of size N is exponential with
rate R * N, and N after k events is simply n0 + k.  That makes the event
schedule a deterministic function of a vector of exponential draws, which
this module exploits: all randomness is drawn in vectorized blocks
(waiting times, dividing-cell choices, division fractions) and the only
sequential part, replaying the divisions to track per-cell toxicity, runs
in the compiled backend.

Toxicity grows linearly at rate alpha inside each cell and is split at
division: the tracked daughter keeps a random fraction of the mother's
amount, the sibling gets the rest, so the split conserves the total
exactly (to the last floating point bit, by construction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._backend import BACKEND_NAME, replay_divisions

MAX_EVENTS = 10_000_000


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for a master seed and a structured spawn key.

    Distinct keys give independent streams, and the same (seed, key) pair
    always gives the same stream regardless of what else was drawn.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one population run.

    founder_toxicity may be a scalar (shared by all founders) or a
    sequence of length n0.
    """

    rate: float
    horizon: float
    n0: int = 1
    alpha: float = 0.0
    founder_toxicity: object = 1.0

    def __post_init__(self):
        for v in (self.rate, self.horizon, self.alpha):
            if not math.isfinite(v):
                raise ValueError("parameters must be finite")
        # horizon 0 is legal and yields an eventless run
        if self.rate <= 0.0 or self.horizon < 0.0:
            raise ValueError("rate must be positive and horizon nonnegative")
        if self.n0 < 1:
            raise ValueError("need at least one founder")
        if self.alpha < 0.0:
            raise ValueError("growth rate must be nonnegative")
        x0 = np.atleast_1d(np.asarray(self.founder_toxicity, dtype=float))
        if x0.size == 1:
            x0 = np.full(self.n0, float(x0[0]))
        if x0.size != self.n0 or not np.all(np.isfinite(x0)) or np.any(x0 < 0.0):
            raise ValueError("founder toxicity must be finite, nonnegative, one per founder")
        object.__setattr__(self, "founder_toxicity", tuple(float(v) for v in x0))

    @property
    def founders(self) -> np.ndarray:
        return np.asarray(self.founder_toxicity, dtype=float)


@dataclass(frozen=True)
class DivisionRecord:
    time: float
    parent: int
    label: Optional[str]
    fraction: float
    parent_toxicity: float
    kept: float
    sibling: float


@dataclass(eq=False)
class Trajectory:
    """Outcome of one run: the event history plus the final population."""

    config: SimConfig
    times: np.ndarray  # event times, increasing
    cells: np.ndarray  # index of the cell that divided, per event
    fractions: np.ndarray  # fraction kept by the tracked daughter, per event
    parent_toxicity: np.ndarray  # mother's toxicity at each division
    birth_toxicity: np.ndarray  # per final cell
    birth_time: np.ndarray  # per final cell
    labels: Optional[list] = None  # binary genealogy labels, when requested
    backend: str = BACKEND_NAME

    @property
    def n_events(self) -> int:
        return self.times.size

    @property
    def population(self) -> int:
        return self.birth_toxicity.size

    def toxicity_at(self, t: Optional[float] = None) -> np.ndarray:
        """Per-cell toxicity at time t (default: the horizon)."""
        if t is None:
            t = self.config.horizon
        return self.birth_toxicity + self.config.alpha * (t - self.birth_time)

    def records(self) -> list:
        """Per-division records, materialized on demand."""
        out = []
        kept = self.fractions * self.parent_toxicity
        for k in range(self.n_events):
            label = self.labels[k] if self.labels is not None else None
            out.append(
                DivisionRecord(
                    time=float(self.times[k]),
                    parent=int(self.cells[k]),
                    label=label,
                    fraction=float(self.fractions[k]),
                    parent_toxicity=float(self.parent_toxicity[k]),
                    kept=float(kept[k]),
                    sibling=float(self.parent_toxicity[k] - kept[k]),
                )
            )
        return out

    def write_events_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["event_index", "time", "parent", "parent_label", "parent_toxicity", "gamma"]
            )
            for k in range(self.n_events):
                label = self.labels[k] if self.labels is not None else ""
                writer.writerow(
                    [
                        k,
                        f"{self.times[k]:.17g}",
                        int(self.cells[k]),
                        label,
                        f"{self.parent_toxicity[k]:.17g}",
                        f"{self.fractions[k]:.17g}",
                    ]
                )

    def write_cells_csv(self, path) -> None:
        import csv

        final = self.toxicity_at()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell", "birth_time", "birth_toxicity", "final_toxicity"])
            for i in range(self.population):
                writer.writerow(
                    [
                        i,
                        f"{self.birth_time[i]:.17g}",
                        f"{self.birth_toxicity[i]:.17g}",
                        f"{final[i]:.17g}",
                    ]
                )


def _event_times(rng: np.random.Generator, config: SimConfig) -> np.ndarray:
    """Division event times in (0, horizon], drawn in deterministic blocks."""
    rate, horizon, n0 = config.rate, config.horizon, config.n0
    expected = n0 * np.expm1(rate * horizon)
    block = int(1.2 * expected) + 64
    times: list = []
    t = 0.0
    k = 0
    while True:
        if k > MAX_EVENTS:
            raise RuntimeError("population exceeded the event cap")
        rates = rate * (n0 + k + np.arange(block, dtype=float))
        cum = t + np.cumsum(rng.standard_exponential(block) / rates)
        stop = int(np.searchsorted(cum, horizon, side="right"))
        times.append(cum[:stop])
        if stop < block:
            return np.concatenate(times) if len(times) > 1 else times[0]
        t = cum[-1]
        k += block
        block = 4096


def simulate(
    model,
    config: SimConfig,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    genealogy: bool = False,
) -> Trajectory:
    """Run one population from time zero to the horizon.

    `model` supplies the division fractions through sample(rng, size).
    Pass either a generator or a seed; draws happen in a fixed order
    (waiting times, then cell choices, then fractions), so equal seeds
    give bit-identical trajectories on both backends.
    """
    if rng is None:
        rng = rng_for(0 if seed is None else int(seed))
    times = _event_times(rng, config)
    m = times.size
    sizes = config.n0 + np.arange(m, dtype=float)
    # floor(u * size) with a clip: the product can round up to size itself
    cells = np.minimum((rng.random(m) * sizes).astype(np.int64), config.n0 + np.arange(m) - 1)
    fractions = model.sample(rng, m) if m else np.empty(0)
    parent_tox, birth_tox, birth_time = replay_divisions(
        times, cells, fractions, config.founders, config.alpha
    )
    labels = _reconstruct_labels(config.n0, cells) if genealogy else None
    return Trajectory(
        config=config,
        times=times,
        cells=cells,
        fractions=np.asarray(fractions, dtype=float),
        parent_toxicity=parent_tox,
        birth_toxicity=birth_tox,
        birth_time=birth_time,
        labels=labels,
    )


def _reconstruct_labels(n0: int, cells: np.ndarray) -> list:
    """Binary genealogy labels of each division's mother.

    Founders are labelled "0".."n0-1"; a division relabels the mother's
    slot with suffix "0" and appends the sibling with suffix "1".
    """
    alive = [str(i) for i in range(n0)]
    mothers = []
    for p in cells:
        lab = alive[p]
        mothers.append(lab)
        alive[p] = lab + "0"
        alive.append(lab + "1")
    return mothers


def sample_population_sizes(
    config: SimConfig, replicates: int, seed: int = 0, key: tuple = ()
) -> np.ndarray:
    """Final population sizes over many runs, skipping the toxicity replay.

    Draws only the waiting times, so it is much faster than simulate()
    when nothing but the cell count is needed.
    """
    out = np.empty(replicates, dtype=np.int64)
    for r in range(replicates):
        rng = rng_for(seed, *key, r)
        out[r] = config.n0 + _event_times(rng, config).size
    return out


# -- time series without replaying ------------------------------------------


def _checked_times(traj: Trajectory, query_times: Sequence[float]) -> np.ndarray:
    q = np.asarray(query_times, dtype=float)
    if q.size and (q.min() < 0.0 or q.max() > traj.config.horizon):
        raise ValueError("query times must lie inside [0, horizon]")
    return q


def population_series(traj: Trajectory, query_times: Sequence[float]) -> np.ndarray:
    """Population size at each query time."""
    q = _checked_times(traj, query_times)
    return traj.config.n0 + np.searchsorted(traj.times, q, side="right")


def mean_age_series(traj: Trajectory, query_times: Sequence[float]) -> np.ndarray:
    """Mean per-cell toxicity at each query time, in one pass.

    The sum over cells of (birth toxicity - alpha * birth time) drops by
    alpha * t_e at an event at t_e and is otherwise constant, so the mean
    at time t needs only the prefix sums of the event times, not a replay.
    """
    cfg = traj.config
    q = _checked_times(traj, query_times)
    drop = np.concatenate([[0.0], np.cumsum(traj.times)])
    k = np.searchsorted(traj.times, q, side="right")
    base = cfg.founders.sum() - cfg.alpha * drop[k]
    return base / (cfg.n0 + k) + cfg.alpha * q


def snapshots(traj: Trajectory, query_times: Sequence[float]) -> np.ndarray:
    """Rows (time, n_alive, mean toxicity, total toxicity) at each query time.

    The total equals the founders' total plus alpha times the exact area
    under the piecewise-constant population-size path.
    """
    q = _checked_times(traj, query_times)
    n = population_series(traj, q).astype(float)
    mean = mean_age_series(traj, q)
    return np.column_stack([q, n, mean, mean * n])


def write_snapshots_csv(traj: Trajectory, query_times: Sequence[float], path) -> None:
    import csv

    rows = snapshots(traj, query_times)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "n_alive", "mean_age", "total_toxicity"])
        for t, n, mean, total in rows:
            writer.writerow([f"{t:.17g}", int(n), f"{mean:.17g}", f"{total:.17g}"])
