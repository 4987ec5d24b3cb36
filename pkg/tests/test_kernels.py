import math

import numpy as np
import pytest

from divkernel.kernels import GAUSS_TRUNC, SQRT_2PI, gaussian_kernel


@pytest.fixture(scope="module")
def kern():
    return gaussian_kernel()


def _quad(f, lo=-12.0, hi=12.0, n=200_001):
    x = np.linspace(lo, hi, n)
    return np.trapezoid(f(x), x)


def test_norm_constants(kern):
    assert kern.l1_norm == 1.0
    assert kern.l2_norm == pytest.approx(2.0 ** -0.5 * math.pi ** -0.25, rel=1e-15)


def test_quadrature_matches_declared_norms(kern):
    assert _quad(kern.evaluate) == pytest.approx(kern.l1_norm, abs=1e-8)
    assert _quad(lambda x: kern.evaluate(x) ** 2) == pytest.approx(
        kern.l2_norm**2, abs=1e-8
    )


def test_moments(kern):
    # vanishing first moment, unit second moment: order-2 kernel
    assert kern.order == 2.0
    assert _quad(lambda x: x * kern.evaluate(x)) == pytest.approx(0.0, abs=1e-12)
    assert _quad(lambda x: x * x * kern.evaluate(x)) == pytest.approx(1.0, abs=1e-8)


def test_peak_and_scaling(kern):
    assert kern.peak == pytest.approx(1.0 / SQRT_2PI, rel=1e-15)
    x = np.array([-0.2, 0.0, 0.35])
    got = kern.scaled(x, 0.1)
    want = np.exp(-0.5 * (x / 0.1) ** 2) / (0.1 * SQRT_2PI)
    np.testing.assert_allclose(got, want, rtol=1e-14)
    with pytest.raises(ValueError):
        kern.scaled(x, 0.0)


def test_self_convolution_rule(kern):
    assert kern.self_convolution(0.1, 0.1) == pytest.approx(0.1 * math.sqrt(2.0))
    # the rule matches brute-force convolution of the two scaled kernels
    l1, l2 = 0.07, 0.13
    x = np.linspace(-2.0, 2.0, 8001)
    at = 0.11
    integrand = kern.scaled(x, l1) * kern.scaled(at - x, l2)
    brute = np.trapezoid(integrand, x)
    assert kern.scaled(np.array([at]), kern.self_convolution(l1, l2))[0] == pytest.approx(
        brute, rel=1e-10
    )


def test_fourier_transform_matches_quadrature(kern):
    for w in (0.0, 0.7, 3.0):
        brute = _quad(lambda x: kern.evaluate(x) * np.cos(w * x))
        assert kern.fourier(np.array([w]))[0] == pytest.approx(brute, abs=1e-8)


def test_truncation_radius_negligible(kern):
    tail = kern.evaluate(np.array([GAUSS_TRUNC]))[0]
    # exp(-8.5**2 / 2) is about 2.05e-16, one ulp-scale notch above 2e-16
    assert tail / kern.peak == pytest.approx(math.exp(-0.5 * GAUSS_TRUNC**2), rel=1e-12)
    assert tail / kern.peak < 2.1e-16
