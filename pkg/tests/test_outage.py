import math
from pathlib import Path

import numpy as np
import pytest

from fblfas.channel import SystemConfig, profile_for
from fblfas.codeword import average_correlation, max_correlation
from fblfas.distribution import amplitude_moments
from fblfas.outage import (
    OutagePoint,
    OutageQuery,
    correlation_for_mode,
    mrc_sinr_upper,
    outage_fas,
    outage_mrc,
    outage_points_to_csv,
    outage_threshold_radius,
    sinr_approximation_fas,
    sinr_lower_bound_fas,
)

FIG7 = SystemConfig(n_ports=10, aperture_w=0.5, n_users=20, blocklength=5)


def _fas(gamma_th: float, config: SystemConfig, mode: str = "mean") -> float:
    return outage_fas(OutageQuery(gamma_th, config, mode), profile_for(config))


def test_sinr_lower_bound() -> None:
    single = SystemConfig(n_users=1, noise_var=0.5)
    assert sinr_lower_bound_fas(2.0, single, 0.3) == pytest.approx(4.0)
    pair = SystemConfig(n_users=2, noise_var=0.5)
    assert sinr_lower_bound_fas(2.0, pair, 0.0) == pytest.approx(1 / (1 + 0.25))
    assert sinr_lower_bound_fas(0.0, pair, 0.0) == 0.0
    with pytest.raises(ValueError):
        sinr_lower_bound_fas(-1.0, pair, 0.0)


def test_sinr_approximation_is_above_the_bound() -> None:
    config = SystemConfig(n_ports=5, n_users=10, blocklength=20).with_snr_db(0)
    profile = profile_for(config)
    rho = correlation_for_mode(config)
    _, power = amplitude_moments(config, profile)
    assert sinr_approximation_fas(config, profile, rho) >= sinr_lower_bound_fas(
        power, config, rho
    )


def test_correlation_for_mode() -> None:
    assert correlation_for_mode(SystemConfig(n_users=1)) == 0.0
    assert correlation_for_mode(FIG7) == pytest.approx(math.sqrt(math.pi / 20))
    assert correlation_for_mode(FIG7, "max") == pytest.approx(max_correlation(5, 20))
    with pytest.raises(ValueError):
        correlation_for_mode(FIG7, "median")


def test_threshold_radius() -> None:
    single = SystemConfig(n_users=1, noise_var=4.0)
    assert outage_threshold_radius(1e-2, single, 0.5) == pytest.approx(0.2)

    rho = average_correlation(5)
    expected = math.sqrt(1e-3 / (1 - 19 * (20 * rho + 1) * 1e-3))
    assert outage_threshold_radius(1e-3, FIG7, rho) == pytest.approx(expected, rel=1e-12)

    # the interference-limited SINR ceiling is 1 / (19 (20 rho + 1)), about 5.9e-3
    assert outage_threshold_radius(1e-2, FIG7, rho) is None
    with pytest.raises(ValueError):
        outage_threshold_radius(0.0, FIG7, rho)


def test_outage_limits() -> None:
    assert _fas(1e-2, FIG7) == 1.0
    assert _fas(1e-12, FIG7) < 1e-10


def test_outage_monotonicity() -> None:
    config = FIG7.with_snr_db(-35)
    gammas = [_fas(g, config) for g in (1e-4, 3e-4, 1e-3, 2e-3)]
    users = [_fas(1e-3, config.with_updates(n_users=u)) for u in (2, 5, 10, 20)]
    ports = [_fas(1e-3, config.with_updates(n_ports=n)) for n in (5, 10, 25, 50)]
    snrs = [_fas(1e-3, FIG7.with_snr_db(s)) for s in (-40, -30, -20, -10, 0)]
    assert np.all(np.diff(gammas) >= 0)
    assert np.all(np.diff(users) >= 0)
    assert np.all(np.diff(ports) < 0)
    assert np.all(np.diff(snrs) <= 0)


def test_max_correlation_is_conservative() -> None:
    for snr_db in (-40, -35, -30):
        config = FIG7.with_snr_db(snr_db)
        assert _fas(1e-3, config, "max") >= _fas(1e-3, config, "mean")


def test_fas_has_no_floor() -> None:
    assert _fas(1e-3, FIG7.with_snr_db(60)) < 1e-6


def test_mrc_sinr_upper() -> None:
    assert mrc_sinr_upper(3, 1, 1.0, 0.5) == pytest.approx(6.0)
    assert mrc_sinr_upper(2, 5, 1.0, 0.0) == pytest.approx(32 / (4 * math.pi))
    assert mrc_sinr_upper(3, 20, 1.0, 10.0) == pytest.approx(
        108 / (19 * math.pi + 360), rel=1e-12
    )
    with pytest.raises(ValueError):
        mrc_sinr_upper(0, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        mrc_sinr_upper(1, 1, 1.0, 0.0)


@pytest.mark.parametrize("L", [1, 2, 5, 9])
def test_outage_mrc_matches_term_recurrence(L: int) -> None:
    x = 1e-3 / mrc_sinr_upper(L, 20, 1.0, 0.2)
    # P(L, x) as the tail e^-x sum_{k>=L} x^k / k!, stable for small x
    term = math.exp(-x) * x**L / math.factorial(L)
    expected, k = 0.0, L
    while term > 1e-30 * max(expected, 1e-300):
        expected += term
        k += 1
        term *= x / k
    assert outage_mrc(1e-3, L, 20, 1.0, 0.2) == pytest.approx(expected, rel=1e-9, abs=1e-300)


def test_outage_mrc_limits() -> None:
    assert outage_mrc(0.0, 3, 20, 1.0, 1.0) == 0.0
    assert outage_mrc(1e6, 3, 20, 1.0, 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        outage_mrc(-1.0, 1, 20, 1.0, 1.0)


def test_mrc_floor() -> None:
    config = FIG7.with_snr_db(60)
    floor = -math.expm1(-1e-3 * math.pi * 19 / 4)
    value = outage_mrc(1e-3, 1, 20, config.channel_var, config.noise_var)
    assert floor == pytest.approx(0.0148, abs=1e-4)
    assert value == pytest.approx(floor, rel=0.05)


@pytest.mark.parametrize("L", [3, 5, 7])
def test_mrc_is_flat_in_users_at_low_snr(L: int) -> None:
    noise_var = 10**3.5
    values = [outage_mrc(1e-4, L, U, 1.0, noise_var) for U in range(10, 101, 10)]
    assert max(values) / min(values) - 1 <= 0.01


def test_query_validation() -> None:
    with pytest.raises(ValueError):
        OutageQuery(0.0, FIG7)
    with pytest.raises(ValueError):
        OutageQuery(1e-3, FIG7, "min")


def test_csv_export(tmp_path: Path) -> None:
    points = [
        OutagePoint("snr_db", -35.0, "fas_n10", 0.3),
        OutagePoint("snr_db", -30.0, "fas_n10", 0.1),
    ]
    text = outage_points_to_csv(points, tmp_path / "op.csv")
    assert text.splitlines() == [
        "x_axis,x_value,series,value",
        "snr_db,-35,fas_n10,0.3",
        "snr_db,-30,fas_n10,0.1",
    ]
    assert (tmp_path / "op.csv").read_text() == text
