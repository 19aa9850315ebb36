"""
Best-port amplitude distribution: reductions, approximation quality and
Monte-Carlo agreement.
"""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from fblfas.channel import (
    PortCorrelationProfile,
    SystemConfig,
    port_correlations_from_offsets,
    profile_for,
)
from fblfas.distribution import (
    DistributionEval,
    amplitude_moments,
    cdf_exact,
    cdf_mvti,
    cdf_on_grid,
    empirical_distribution,
    evaluate_distribution,
    frozen_point,
    pdf_exact,
    pdf_mvti,
    pdf_on_grid,
    tail_radius,
)
from fblfas.quadrature import QuadratureSpec, integrate

R_GRID = np.linspace(0.0, 4.0, 50)


def _independent(n_ports: int) -> tuple[SystemConfig, PortCorrelationProfile]:
    return SystemConfig(n_ports=n_ports), PortCorrelationProfile(
        mu=np.array([1.0] + [0.0] * (n_ports - 1))
    )


@pytest.mark.parametrize("sigma2", [0.5, 1.0, 3.0])
def test_single_port_is_rayleigh(sigma2: float) -> None:
    config = SystemConfig(n_ports=1, channel_var=sigma2)
    profile = profile_for(config)
    r = R_GRID * np.sqrt(sigma2)
    cdf = cdf_on_grid(r, config, profile, "exact")
    pdf = pdf_on_grid(r, config, profile, "exact")
    np.testing.assert_allclose(cdf, -np.expm1(-(r**2) / sigma2), atol=1e-10)
    np.testing.assert_allclose(pdf, 2 * r / sigma2 * np.exp(-(r**2) / sigma2), atol=1e-10)


@pytest.mark.parametrize("n_ports", [2, 4, 8])
def test_independent_ports(n_ports: int) -> None:
    config, profile = _independent(n_ports)
    expected = (-np.expm1(-(R_GRID**2))) ** n_ports
    np.testing.assert_allclose(cdf_on_grid(R_GRID, config, profile, "exact"), expected, atol=1e-7)
    # nothing to freeze when the ports do not depend on the reference port
    np.testing.assert_allclose(cdf_mvti(R_GRID, config, profile), expected, atol=1e-12)


def test_degenerate_ports_are_dropped() -> None:
    config = SystemConfig(n_ports=3, aperture_w=1e-6)
    profile = profile_for(config)
    assert cdf_exact(1.0, config, profile) == pytest.approx(1 - np.exp(-1.0), abs=1e-12)


def test_cdf_properties() -> None:
    config = SystemConfig(n_ports=10, aperture_w=0.5)
    profile = profile_for(config)
    result = evaluate_distribution(config, profile, R_GRID, method="exact")
    assert result.cdf[0] == 0.0
    assert np.all(np.diff(result.cdf) >= 0)
    assert cdf_exact(tail_radius(config), config, profile) == pytest.approx(1.0, abs=1e-9)
    assert np.all(result.pdf >= 0)


def test_more_ports_shift_mass_up() -> None:
    """
    Adding a port can only lower the CDF.
    """
    offsets = [0.0, 0.1, 0.3]
    small = port_correlations_from_offsets(offsets)
    large = port_correlations_from_offsets(offsets + [0.45])
    r = np.linspace(0.1, 3.0, 15)
    cdf_small = cdf_on_grid(r, SystemConfig(n_ports=3), small, "exact")
    cdf_large = cdf_on_grid(r, SystemConfig(n_ports=4), large, "exact")
    assert np.all(cdf_large <= cdf_small + 1e-10)


def test_pdf_integrates_to_one() -> None:
    config = SystemConfig(n_ports=10, aperture_w=0.5)
    profile = profile_for(config)
    mass = integrate(
        lambda r: pdf_on_grid(r, config, profile, "exact"), 0.0, tail_radius(config)
    ).value
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_pdf_is_derivative_of_cdf() -> None:
    config = SystemConfig(n_ports=4, aperture_w=1.0)
    profile = profile_for(config)
    quad = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-15)
    h = 1e-4
    for r in (0.25, 0.5, 1.0, 1.7, 2.5):
        upper = cdf_exact(r + h, config, profile, quad)
        lower = cdf_exact(r - h, config, profile, quad)
        central = (upper - lower) / (2 * h)
        assert pdf_exact(r, config, profile, quad) == pytest.approx(central, abs=1e-5)


def test_mvti_is_close_to_exact() -> None:
    config = SystemConfig(n_ports=10, aperture_w=0.5)
    profile = profile_for(config)
    r = np.linspace(0.0, 4.0, 81)
    exact = evaluate_distribution(config, profile, r, method="exact")
    mvti = evaluate_distribution(config, profile, r, method="mvti")
    assert exact.sup_distance(mvti) <= 0.03
    assert np.all(pdf_mvti(r, config, profile) >= 0)


def test_frozen_point() -> None:
    assert frozen_point(0.0) == 0.0
    assert frozen_point(1.0) == pytest.approx(1 - 1 / (np.e - 1), rel=1e-14)
    assert frozen_point(1e-3 * (1 - 1e-12)) == pytest.approx(frozen_point(1e-3), rel=1e-9)
    assert frozen_point(800.0) == 1.0
    a = np.logspace(-6, 2, 40)
    t = np.asarray(frozen_point(a))
    assert np.all((t > 0) & (t <= a / 2))
    with pytest.raises(ValueError):
        frozen_point(-1.0)


def test_tail_radius() -> None:
    assert tail_radius(SystemConfig(n_ports=10)) == pytest.approx(np.sqrt(np.log(1e11)))
    with pytest.raises(ValueError):
        tail_radius(SystemConfig(), tail=0.0)


def test_empirical_matches_exact() -> None:
    config = SystemConfig(n_ports=10, aperture_w=0.5)
    profile = profile_for(config)
    r = np.linspace(0.0, 4.0, 81)
    exact = evaluate_distribution(config, profile, r, method="exact")
    empirical = empirical_distribution(config, profile, 100_000, seed=42, r_grid=r)
    assert empirical.method == "empirical"
    assert exact.sup_distance(empirical) <= 0.01
    again = empirical_distribution(config, profile, 100_000, seed=42, r_grid=r)
    np.testing.assert_array_equal(empirical.cdf, again.cdf)


def test_empirical_default_grid() -> None:
    config = SystemConfig(n_ports=3)
    result = empirical_distribution(config, profile_for(config), 2000, seed=1, n_points=50)
    assert result.r_grid.shape == (50,)
    assert result.cdf[-1] == 1.0


def test_amplitude_moments_of_rayleigh() -> None:
    config = SystemConfig(n_ports=1, channel_var=2.0)
    mean, power = amplitude_moments(config, profile_for(config))
    assert mean == pytest.approx(np.sqrt(np.pi * 2.0) / 2, rel=1e-6)
    assert power == pytest.approx(2.0, rel=1e-6)


def test_amplitude_moments_grow_with_ports() -> None:
    moments = [
        amplitude_moments(SystemConfig(n_ports=n), profile_for(SystemConfig(n_ports=n)))
        for n in (1, 5, 20)
    ]
    assert moments[0][0] < moments[1][0] < moments[2][0]


def test_csv_export(tmp_path: Path) -> None:
    config = SystemConfig(n_ports=4)
    result = evaluate_distribution(config, profile_for(config), np.linspace(0, 4, 200))
    path = tmp_path / "dist.csv"
    text = result.to_csv(path)
    assert text.splitlines()[0] == "r,cdf,pdf,method"
    frame = pd.read_csv(path)
    assert len(frame) == 200
    assert set(frame["method"]) == {"mvti"}
    assert result.config_hash == config.fingerprint()


def test_invalid_inputs() -> None:
    config = SystemConfig(n_ports=4)
    profile = profile_for(config)
    with pytest.raises(ValueError):
        cdf_exact(-1.0, config, profile)
    with pytest.raises(ValueError):
        cdf_exact(1.0, SystemConfig(n_ports=5), profile)
    with pytest.raises(ValueError):
        evaluate_distribution(config, profile, [0.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        cdf_on_grid([1.0], config, profile, "empirical")
    with pytest.raises(ValueError):
        DistributionEval(np.zeros(2), np.zeros(3), np.zeros(2), "exact", "")
