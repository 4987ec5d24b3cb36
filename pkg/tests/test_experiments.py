"""Monte Carlo orchestration: reproducibility, aggregation, calibration."""

import csv
import math

import numpy as np
import pytest

from divkernel.division import BetaKernel
from divkernel.estimate import ise_profile, relative_error
from divkernel.experiments import (
    McConfig,
    _union_ladder,
    calibrate_epsilon,
    default_age_times,
    draw_fractions,
    fit_rate,
    run_mean_age_experiment,
    run_mise_experiment,
    run_symmetrized_experiment,
    theoretical_rate_slope,
)
from divkernel.grids import BandwidthGrid, EvaluationGrid, l2_norm
from divkernel.simulate import SimConfig, rng_for, simulate

MODEL = BetaKernel(2.0)


@pytest.fixture(scope="module")
def tiny_report():
    cfg = McConfig(model=MODEL, horizons=(6.0,), replicates=3, seed=77)
    return cfg, run_mise_experiment(cfg)


def test_single_replicate_has_zero_spread():
    cfg = McConfig(model=MODEL, horizons=(6.0,), methods=("gl", "rot"), replicates=1, seed=5)
    report = run_mise_experiment(cfg)
    for row in report.rows:
        assert row.sd_error == 0.0
        assert math.isfinite(row.mean_error)


def test_experiment_determinism(tiny_report, tmp_path):
    cfg, report = tiny_report
    again = run_mise_experiment(cfg)
    for a, b in zip(report.rows, again.rows):
        assert a == b
    for key, errs in report.errors.items():
        np.testing.assert_array_equal(errs, again.errors[key])
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    report.write_table_csv(p1)
    again.write_table_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()
    r1, r2 = tmp_path / "ra.csv", tmp_path / "rb.csv"
    report.write_replicates_csv(r1)
    again.write_replicates_csv(r2)
    assert r1.read_bytes() == r2.read_bytes()


def test_report_aggregates_recompute(tiny_report):
    _, report = tiny_report
    for row in report.rows:
        errs = report.errors[(row.horizon, row.method)]
        bws = report.bandwidths[(row.horizon, row.method)]
        assert row.mean_error == float(errs.mean())
        assert row.sd_error == float(errs.std(ddof=0))
        finite = bws[np.isfinite(bws)]
        if row.method == "mle":
            assert math.isnan(row.mean_bandwidth)
            assert finite.size == 0
        else:
            assert row.mean_bandwidth == float(finite.mean())
        assert row.mean_sample == float(report.sample_sizes[row.horizon].mean())
    with pytest.raises(KeyError):
        report.row(6.0, "nope")


def test_oracle_column_recomputes_per_replicate(tiny_report):
    cfg, report = tiny_report
    # recompute the oracle column from scratch through the public pieces
    grid = EvaluationGrid()
    truth = MODEL.density(grid.points)
    sim = SimConfig(rate=cfg.rate, horizon=6.0, n0=cfg.n0, alpha=cfg.alpha)
    for r in range(cfg.replicates):
        gammas = draw_fractions(MODEL, sim, cfg.seed, 0, r)
        ladder = BandwidthGrid.for_sample_size(gammas.size)
        ise = ise_profile(gammas, grid, truth, ladder)
        best = int(np.argmin(ise))
        assert report.bandwidths[(6.0, "oracle")][r] == ladder.values[best]
        expected = math.sqrt(ise[best]) / l2_norm(truth, grid)
        assert report.errors[(6.0, "oracle")][r] == pytest.approx(expected, rel=1e-12)


def test_oracle_never_beaten_by_gl_on_shared_ladder(tiny_report):
    _, report = tiny_report
    gl = report.errors[(6.0, "gl")]
    oracle = report.errors[(6.0, "oracle")]
    assert np.all(oracle <= gl + 1e-15)


def test_gl_errors_recompute_from_draws(tiny_report):
    cfg, report = tiny_report
    from divkernel.estimate import gl_select

    grid = EvaluationGrid()
    truth = MODEL.density(grid.points)
    sim = SimConfig(rate=cfg.rate, horizon=6.0, n0=cfg.n0, alpha=cfg.alpha)
    for r in range(cfg.replicates):
        gammas = draw_fractions(MODEL, sim, cfg.seed, 0, r)
        est = gl_select(gammas, grid, cfg.chi_margin)
        assert report.bandwidths[(6.0, "gl")][r] == est.bandwidth
        err = relative_error(est.values, truth, grid)
        assert report.errors[(6.0, "gl")][r] == pytest.approx(err, rel=1e-12)


def test_draw_fractions_redraws_until_two():
    # sparse regime: the first attempt usually yields under two divisions
    sim = SimConfig(rate=0.5, horizon=2.0)
    redraw_seen = False
    for r in range(25):
        gammas = draw_fractions(MODEL, sim, 909, 0, r)
        assert gammas.size >= 2
        first = simulate(MODEL, sim, rng=rng_for(909, 0, r, 0)).fractions
        if first.size < 2:
            redraw_seen = True
            assert not np.array_equal(first, gammas[: first.size]) or first.size == 0
    assert redraw_seen


def test_draw_fractions_gives_up_eventually():
    sim = SimConfig(rate=1e-6, horizon=1e-6)
    with pytest.raises(RuntimeError):
        draw_fractions(MODEL, sim, 1, 0, 0)


def test_union_ladder_depth():
    # deepest member wins: floor(0.5 * 100) = 50 capped at 32
    got = _union_ladder([10, 100])
    assert got.values == tuple(1.0 / k for k in range(1, 33))
    assert _union_ladder([10]).values == (1.0, 0.5, 1.0 / 3.0, 0.25, 0.2)


def test_fit_rate_flat_and_frozen():
    flat = fit_rate([1.0, 2.0, 3.0], [0.5, 0.5, 0.5])
    assert flat.slope == pytest.approx(0.0, abs=1e-14)
    assert flat.intercept == pytest.approx(math.log(0.5), rel=1e-12)
    # frozen least-squares value, computed twice independently offline
    fit = fit_rate([13.0, 17.0, 20.0], [0.1001, 0.0458, 0.0261])
    assert fit.slope == pytest.approx(-0.1922193150692744, abs=1e-12)
    assert theoretical_rate_slope(1.0, 0.5) == pytest.approx(-1.0 / 6.0, rel=1e-15)
    assert theoretical_rate_slope(2.0, 0.5) == pytest.approx(-0.2, rel=1e-15)
    with pytest.raises(ValueError):
        fit_rate([1.0], [0.5])
    with pytest.raises(ValueError):
        fit_rate([1.0, 2.0], [0.5])


def test_calibration_common_random_numbers():
    cfg = McConfig(model=MODEL, horizons=(9.0,), replicates=24, seed=31)
    report = calibrate_epsilon(cfg, [-0.68, 0.0, 0.5])
    again = calibrate_epsilon(cfg, [-0.68, 0.5])
    # same seed means the very same trees, whatever margins are scanned
    assert report.sample_digest == again.sample_digest
    assert report.oracle_bandwidth == again.oracle_bandwidth
    other = calibrate_epsilon(
        McConfig(model=MODEL, horizons=(9.0,), replicates=24, seed=32), [-0.68]
    )
    assert other.sample_digest != report.sample_digest
    assert [r.epsilon for r in report.rows] == [-0.68, 0.0, 0.5]
    mise = {r.epsilon: r.mise for r in report.rows}
    assert mise[-0.68] <= mise[0.5]
    assert report.rows[0].mean_bandwidth > 0.0
    with pytest.raises(ValueError):
        calibrate_epsilon(cfg, [-1.0])
    with pytest.raises(ValueError):
        calibrate_epsilon(McConfig(model=MODEL, horizons=(9.0, 13.0), replicates=4), [0.0])


def test_symmetrized_run_pairs_replicates():
    cfg = McConfig(model=MODEL, horizons=(9.0,), replicates=30, seed=21)
    report = run_symmetrized_experiment(cfg)
    assert {r.method for r in report.rows} == {"gl", "gl_sym"}
    raw = report.errors[(9.0, "gl")]
    sym = report.errors[(9.0, "gl_sym")]
    # identical trees and identical selected bandwidths, only the mirror differs
    np.testing.assert_array_equal(
        report.bandwidths[(9.0, "gl")], report.bandwidths[(9.0, "gl_sym")]
    )
    assert sym.mean() <= raw.mean() + 2.0 * raw.std(ddof=0) / math.sqrt(raw.size)


def test_mean_age_dilutes_without_growth():
    report = run_mean_age_experiment([2.0], n_trees=5, alpha=0.0, seed=13)
    assert report.means[2.0][-1] < 0.01
    assert report.spread[2.0] >= 0.0
    with pytest.raises(ValueError):
        run_mean_age_experiment([2.0], n_trees=1)


def test_mc_config_validation():
    with pytest.raises(ValueError):
        McConfig(model=MODEL, horizons=(6.0,), methods=("gl", "magic"))
    with pytest.raises(ValueError):
        McConfig(model=MODEL, horizons=(6.0,), replicates=0)
    with pytest.raises(ValueError):
        McConfig(model=MODEL, horizons=())


def test_csv_layouts(tiny_report, tmp_path):
    _, report = tiny_report
    table = tmp_path / "table.csv"
    reps = tmp_path / "reps.csv"
    report.write_table_csv(table)
    report.write_replicates_csv(reps)
    with open(table, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["T", "method", "e_bar", "sigma_e", "ell_bar"]
    assert len(rows) == 1 + len(report.rows)
    assert float(rows[1][2]) == report.rows[0].mean_error
    with open(reps, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["T", "method", "replicate", "error", "bandwidth", "m_t"]
    n_cells = sum(len(v) for v in report.errors.values())
    assert len(rows) == 1 + n_cells

    cfg = McConfig(model=MODEL, horizons=(9.0,), replicates=6, seed=41)
    eps_report = calibrate_epsilon(cfg, [0.0])
    eps_csv = tmp_path / "eps.csv"
    eps_report.write_csv(eps_csv)
    with open(eps_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["epsilon", "mise", "e_bar", "sigma_e", "ell_bar", "gap"]
    assert float(rows[1][1]) == eps_report.rows[0].mise

    fit = fit_rate([13.0, 17.0], [0.1, 0.05])
    fit_csv = tmp_path / "fit.csv"
    fit.write_csv(fit_csv)
    with open(fit_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["T", "e_bar", "slope", "intercept", "theoretical_slope"]
    assert float(rows[1][2]) == fit.slope

    age = run_mean_age_experiment([2.0], n_trees=3, times=np.array([1.0, 2.0]), seed=3)
    age_csv = tmp_path / "age.csv"
    spread_csv = tmp_path / "spread.csv"
    age.write_csv(age_csv)
    age.write_spread_csv(spread_csv)
    with open(age_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["a", "time", "mean_age", "q25", "q75"]
    assert len(rows) == 1 + 2
    with open(spread_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["a", "mean_iqr"]
    assert float(rows[1][1]) == age.spread[2.0]


def test_default_age_times_grid():
    times = default_age_times()
    assert times.size == 51
    assert times[0] == 6.0
    assert times[-1] == pytest.approx(24.0, rel=1e-12)
    assert np.all(np.diff(times) > 0.0)
