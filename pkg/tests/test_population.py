"""Closed-form population-count law against independent summation oracles."""

import math

import numpy as np
import pytest
from scipy import stats

from divkernel.population import AuxiliaryLaw, PopulationLaw


def test_pmf_trivial_masses():
    # one founder, survival probability one half: P(no division) = 1/2
    law = PopulationLaw(n0=1, rate=1.0, horizon=math.log(2.0))
    assert law.pmf(np.array([1]))[0] == pytest.approx(0.5, rel=1e-14)
    # two founders both idle
    law2 = PopulationLaw(n0=2, rate=1.0, horizon=math.log(2.0))
    assert law2.pmf(np.array([2]))[0] == pytest.approx(0.25, rel=1e-14)
    assert law2.pmf(np.array([0, 1])).tolist() == [0.0, 0.0]


def test_pmf_matches_scipy_negative_binomial():
    law = PopulationLaw(n0=3, rate=0.7, horizon=1.3)
    n = np.arange(3, 60)
    want = stats.nbinom.pmf(n - 3, 3, law.p)
    np.testing.assert_allclose(law.pmf(n), want, rtol=1e-12)


def test_pmf_normalizes():
    law = PopulationLaw(n0=2, rate=1.0, horizon=1.0)
    total = law.pmf(np.arange(2, 5001)).sum()
    assert total == pytest.approx(1.0, abs=1e-10)


def test_pmf_rejects_non_integer():
    law = PopulationLaw(n0=1, rate=1.0, horizon=1.0)
    with pytest.raises(ValueError):
        law.pmf(np.array([1.5]))


def test_mean_closed_form():
    assert PopulationLaw(1, 0.5, 13.0).mean() == pytest.approx(math.exp(6.5), rel=1e-14)
    assert PopulationLaw(3, 1.0, 2.0).mean() == pytest.approx(3.0 * math.e**2, rel=1e-14)
    law = PopulationLaw(2, 0.25, 4.0)
    assert law.mean_new_cells() == pytest.approx(law.mean() - 2.0, rel=1e-14)


def test_inv_mean_single_founder_closed_form():
    law = PopulationLaw(n0=1, rate=1.0, horizon=math.log(2.0))
    assert law.inv_mean() == pytest.approx(math.log(2.0), rel=1e-12)


def test_inv_mean_series_against_direct_sum():
    # independent oracle: brute pmf/n sum with a generous cutoff
    for n0, rate, horizon in [(2, 1.0, 1.0), (3, 0.8, 1.5), (5, 0.5, 2.0)]:
        law = PopulationLaw(n0=n0, rate=rate, horizon=horizon)
        n = np.arange(n0, 400_000)
        brute = float(np.sum(stats.nbinom.pmf(n - n0, n0, law.p) / n))
        assert law.inv_mean() == pytest.approx(brute, rel=1e-10)


def test_inv_mean_alternating_agrees_at_small_exponent():
    law = PopulationLaw(n0=2, rate=0.1, horizon=0.1)
    assert law.inv_mean_alternating() == pytest.approx(law.inv_mean(), rel=1e-9)
    law3 = PopulationLaw(n0=3, rate=0.2, horizon=0.5)
    assert law3.inv_mean_alternating() == pytest.approx(law3.inv_mean(), rel=1e-6)


def test_inv_mean_bounds_grid():
    # envelope p/n0 <= E[1/N] <= p/(n0-1) on a 20-point parameter grid
    combos = [
        (n0, rate, horizon)
        for n0 in (2, 3, 4, 6, 11)
        for rate, horizon in ((0.25, 1.0), (0.5, 1.0), (1.0, 1.0), (1.0, 2.0))
    ]
    assert len(combos) == 20
    for n0, rate, horizon in combos:
        law = PopulationLaw(n0=n0, rate=rate, horizon=horizon)
        lower, upper = law.inv_mean_bounds()
        value = law.inv_mean()
        assert lower <= value <= upper, (n0, rate, horizon)


def test_inv_mean_decreasing_in_horizon():
    values = [PopulationLaw(2, 0.5, t).inv_mean() for t in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_single_founder_bounds_upper_is_infinite():
    lower, upper = PopulationLaw(1, 1.0, 1.0).inv_mean_bounds()
    assert lower == pytest.approx(math.exp(-1.0))
    assert math.isinf(upper)


def test_rate_factor():
    assert PopulationLaw(2, 0.5, 13.0).rate_factor() == pytest.approx(
        math.exp(-6.5), rel=1e-14
    )
    law1 = PopulationLaw(1, 1.0, math.log(2.0))
    assert law1.rate_factor() == pytest.approx(law1.inv_mean(), rel=1e-14)
    # single founder, long horizon: dominated by R T exp(-R T)
    law_long = PopulationLaw(1, 1.0, 40.0)
    assert law_long.rate_factor() / (40.0 * math.exp(-40.0)) == pytest.approx(1.0, abs=1e-12)


def test_law_validation():
    for bad in [dict(n0=0, rate=1, horizon=1), dict(n0=1, rate=0, horizon=1),
                dict(n0=1, rate=1, horizon=0)]:
        with pytest.raises(ValueError):
            PopulationLaw(**bad)


def test_auxiliary_mean_values():
    law = AuxiliaryLaw(y0=1.0, alpha=0.45, rate=0.4)
    assert law.mean(0.0) == pytest.approx(1.0, rel=1e-15)
    assert law.equilibrium == pytest.approx(1.125, rel=1e-15)
    # equilibrium start is a fixed point
    fixed = AuxiliaryLaw(y0=1.125, alpha=0.45, rate=0.4)
    assert fixed.mean(17.3) == pytest.approx(1.125, rel=1e-15)
    want = (1.0 - 1.125) * math.exp(-0.4 * 24.0) + 1.125
    assert law.mean(24.0) == pytest.approx(want, rel=1e-14)
    assert law.mean(24.0) == pytest.approx(1.12499, abs=5e-6)


def test_auxiliary_gap_decays_at_rate():
    law = AuxiliaryLaw(y0=2.0, alpha=0.45, rate=0.4)
    t = np.linspace(0.0, 5.0, 11)
    gap = np.abs(law.mean(t) - law.equilibrium)
    slope = np.polyfit(t, np.log(gap), 1)[0]
    assert slope == pytest.approx(-0.4, abs=1e-9)


def test_auxiliary_validation():
    with pytest.raises(ValueError):
        AuxiliaryLaw(y0=1.0, alpha=0.45, rate=0.0)
    with pytest.raises(ValueError):
        AuxiliaryLaw(y0=1.0, alpha=-0.1, rate=0.4)
