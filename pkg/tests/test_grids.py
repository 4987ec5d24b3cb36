import numpy as np
import pytest

from divkernel.grids import BandwidthGrid, EvaluationGrid, l2_distance, l2_norm


def test_default_grid_shape():
    grid = EvaluationGrid()
    assert grid.lo == -0.5 and grid.hi == 1.5 and grid.n_points == 2001
    assert grid.dx == pytest.approx(0.001, abs=1e-15)
    pts = grid.points
    assert pts[0] == -0.5 and pts[-1] == 1.5
    assert pts[1000] == 0.5
    assert grid.symmetric_about_half


def test_grid_must_bracket_unit_interval():
    with pytest.raises(ValueError):
        EvaluationGrid(lo=0.0, hi=1.5)
    with pytest.raises(ValueError):
        EvaluationGrid(lo=-0.5, hi=1.0)
    with pytest.raises(ValueError):
        EvaluationGrid(n_points=1)


def test_trapezoid_weights_sum_to_length():
    grid = EvaluationGrid(lo=-0.25, hi=1.75, n_points=401)
    assert grid.trapezoid_weights.sum() == pytest.approx(2.0, rel=1e-12)
    assert grid.trapezoid_weights[0] == pytest.approx(0.5 * grid.dx)
    assert not grid.points.flags.writeable


def test_l2_norm_against_polynomial_integral():
    # integral of x^2 over [-0.5, 1.5] is 3.5/3
    grid = EvaluationGrid()
    got = l2_norm(grid.points, grid)
    assert got == pytest.approx(np.sqrt(3.5 / 3.0), rel=1e-6)


def test_l2_distance_symmetry_and_zero():
    grid = EvaluationGrid(n_points=101)
    rng = np.random.default_rng(0)
    a = rng.normal(size=101)
    b = rng.normal(size=101)
    assert l2_distance(a, a, grid) == 0.0
    assert l2_distance(a, b, grid) == pytest.approx(l2_distance(b, a, grid), rel=1e-15)


def test_ladder_accepts_decreasing_unit_fractions():
    ladder = BandwidthGrid((1.0, 0.5, 1.0 / 3.0, 0.25))
    assert len(ladder) == 4
    assert ladder.smallest == 0.25
    assert list(ladder) == [1.0, 0.5, 1.0 / 3.0, 0.25]
    arr = ladder.as_array
    assert isinstance(arr, np.ndarray) and np.all(np.diff(arr) < 0)


def test_ladder_rejects_non_decreasing():
    with pytest.raises(ValueError):
        BandwidthGrid((0.5, 1.0))
    with pytest.raises(ValueError):
        BandwidthGrid((1.0, 1.0))
    with pytest.raises(ValueError):
        BandwidthGrid(())


def test_ladder_for_sample_size():
    # depth floor(0.5 m), floored at one level and capped at 32
    assert BandwidthGrid.for_sample_size(20).values == tuple(1.0 / k for k in range(1, 11))
    assert BandwidthGrid.for_sample_size(2).values == (1.0,)
    assert len(BandwidthGrid.for_sample_size(10**6)) == 32
    assert len(BandwidthGrid.for_sample_size(2561, cap=64)) == 64
    assert BandwidthGrid.for_sample_size(200, delta=0.02).values == tuple(
        1.0 / k for k in range(1, 5)
    )
