"""
Special functions against closed forms and scipy distributions.
"""

import math

import numpy as np
import pytest
from scipy.stats import ncx2

from fblfas.special import (
    AccuracyBudget,
    bessel_i0,
    bessel_i0_scaled,
    bessel_j0,
    gauss_q,
    log_binomial,
    marcum_q1,
    marcum_q1_pair,
)


def test_bessel_values() -> None:
    assert bessel_j0(0.0) == 1.0
    assert bessel_j0(2.404825557695773) == pytest.approx(0.0, abs=1e-12)
    assert bessel_i0(0.0) == 1.0
    assert bessel_i0_scaled(700.0) == pytest.approx(1 / math.sqrt(2 * math.pi * 700), rel=1e-3)
    assert isinstance(bessel_j0(1.0), float)
    assert bessel_j0(np.zeros(3)).shape == (3,)


def test_invalid_inputs() -> None:
    with pytest.raises(ValueError):
        bessel_j0(np.nan)
    with pytest.raises(ValueError):
        bessel_i0_scaled(-1.0)
    with pytest.raises(ValueError):
        log_binomial(3, 4)
    with pytest.raises(ValueError):
        marcum_q1(-1.0, 1.0)
    with pytest.raises(ValueError):
        AccuracyBudget(max_terms=0)


def test_gauss_q() -> None:
    assert gauss_q(0.0) == 0.5
    assert gauss_q(1.959963984540054) == pytest.approx(0.025, rel=1e-12)
    assert gauss_q(40.0) > 0.0


@pytest.mark.parametrize("n,k", [(10, 3), (50, 25), (7, 0), (7, 7), (1000, 1)])
def test_log_binomial(n: int, k: int) -> None:
    assert log_binomial(n, k) == pytest.approx(math.log(math.comb(n, k)), abs=1e-10)


def test_log_binomial_large_n() -> None:
    exact = math.lgamma(10**6 + 1) - math.lgamma(10 + 1) - math.lgamma(10**6 - 10 + 1)
    assert log_binomial(10**6, 10) == pytest.approx(exact, rel=1e-10)


def test_marcum_edges() -> None:
    assert marcum_q1(0.0, 1.5) == pytest.approx(math.exp(-1.125), rel=1e-14)
    assert marcum_q1(3.0, 0.0) == 1.0
    assert marcum_q1(0.0, 0.0) == 1.0


@pytest.mark.parametrize("a", [0.1, 0.5, 1.0, 2.0, 4.0, 7.0, 12.0])
@pytest.mark.parametrize("b", [0.1, 0.5, 1.0, 2.0, 4.0, 7.0, 12.0])
def test_marcum_against_noncentral_chi2(a: float, b: float) -> None:
    """
    Q1(a, b) is the survival function of a noncentral chi-square with
    2 degrees of freedom and noncentrality a^2, evaluated at b^2.
    """
    reference = ncx2.sf(b * b, 2, a * a)
    assert marcum_q1(a, b) == pytest.approx(reference, abs=1e-9)


def test_marcum_pair_is_consistent() -> None:
    a = np.array([0.5, 2.0, 6.0, 10.0])
    b = np.array([2.0, 1.0, 6.0, 9.0])
    q, comp = marcum_q1_pair(a, b)
    np.testing.assert_allclose(q + comp, 1.0, atol=1e-12)
    assert np.all((q >= 0) & (q <= 1))


def test_marcum_small_complement_keeps_relative_accuracy() -> None:
    # 1 - Q1(0, b) = 1 - exp(-b^2/2) ~ b^2/2 for small b
    _, comp = marcum_q1_pair(np.array([1e-12]), np.array([1e-5]))
    assert comp[0] == pytest.approx(5e-11, rel=1e-6)


def test_marcum_monotone() -> None:
    b = np.linspace(0.0, 10.0, 101)
    values = marcum_q1(2.0, b)
    assert np.all(np.diff(values) <= 0)
    a = np.linspace(0.0, 10.0, 101)
    values = marcum_q1(a, 3.0)
    assert np.all(np.diff(values) >= 0)


def test_marcum_monotone_on_grid() -> None:
    grid = np.linspace(0.0, 8.0, 20)
    a, b = np.meshgrid(grid, grid, indexing="ij")
    values = marcum_q1(a, b)
    assert values.shape == (20, 20)
    # non-decreasing in a (axis 0), non-increasing in b (axis 1)
    assert np.all(np.diff(values, axis=0) >= -1e-10)
    assert np.all(np.diff(values, axis=1) <= 1e-10)
    assert np.all((values >= 0.0) & (values <= 1.0))


def test_bessel_i0_scaled_range() -> None:
    x = np.concatenate([[0.0], np.logspace(-6, 4, 200)])
    values = bessel_i0_scaled(x)
    assert values[0] == 1.0
    assert np.all((values > 0.0) & (values <= 1.0))
    assert np.all(np.diff(values) <= 0.0)


def test_gauss_q_symmetry() -> None:
    x = np.linspace(-8.0, 8.0, 161)
    np.testing.assert_allclose(gauss_q(x) + gauss_q(-x), 1.0, rtol=0, atol=1e-14)
    assert np.all(np.diff(gauss_q(x)) <= 0.0)
