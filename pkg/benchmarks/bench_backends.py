"""Timing and agreement check: compiled extension vs NumPy fallback.

Runs the two hot kernels (event replay, grid KDE) on identical synthetic
workloads through both implementations, reports wall times, and fails if
the outputs disagree (replay must match bit for bit; the KDE is allowed
floating point noise from different exp/summation orders).

Usage: python benchmarks/bench_backends.py [--events N] [--grid-points N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from divkernel import _ref

try:
    from divkernel import _core
except ImportError:
    _core = None


def _time(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_replay(n_events: int, rng) -> list:
    times = np.sort(rng.uniform(0.0, 20.0, n_events))
    sizes = 1 + np.arange(n_events)
    cells = np.minimum((rng.random(n_events) * sizes).astype(np.int64), sizes - 1)
    fracs = rng.beta(2.0, 2.0, n_events)
    x0 = np.array([1.0])
    args = (times, cells, fracs, x0, 0.35)

    rows = []
    t_ref, ref_out = _time(_ref.replay_divisions, *args)
    rows.append(("replay", "numpy", t_ref, None))
    if _core is not None:
        t_core, core_out = _time(_core.replay_divisions, *args)
        same = all(np.array_equal(a, b) for a, b in zip(ref_out, core_out))
        if not same:
            raise SystemExit("FAIL: replay outputs differ between backends")
        rows.append(("replay", "compiled", t_core, t_ref / t_core))
    return rows


def bench_kde(n_samples: int, n_points: int, rng) -> list:
    samples = rng.beta(2.0, 2.0, n_samples)
    lo, hi = -0.5, 1.5
    dx = (hi - lo) / (n_points - 1)
    rows = []
    for bandwidth in (0.002, 0.02):
        args = (samples, lo, dx, n_points, bandwidth, 8.5)
        t_ref, ref_out = _time(_ref.gaussian_kde_grid, *args)
        rows.append((f"kde l={bandwidth}", "numpy", t_ref, None))
        if _core is not None:
            t_core, core_out = _time(_core.gaussian_kde_grid, *args)
            err = np.max(np.abs(core_out - ref_out)) / max(np.max(ref_out), 1.0)
            if err > 1e-13:
                raise SystemExit(f"FAIL: kde backends disagree, rel err {err:.3e}")
            rows.append((f"kde l={bandwidth}", "compiled", t_core, t_ref / t_core))
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--events", type=int, default=200_000)
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--grid-points", type=int, default=2001)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = bench_replay(args.events, rng)
    rows += bench_kde(args.samples, args.grid_points, rng)

    print(f"{'workload':<14} {'backend':<10} {'seconds':>10} {'speedup':>9}")
    for name, backend, seconds, speedup in rows:
        extra = f"{speedup:8.1f}x" if speedup else " " * 9
        print(f"{name:<14} {backend:<10} {seconds:>10.4f} {extra}")
    if _core is None:
        print("compiled extension not available; timed the fallback only")
    else:
        print("agreement: replay bitwise, kde within 1e-13 relative")


if __name__ == "__main__":
    main()
