"""
SINR and outage probability of the FAS receiver and of the L-antenna MRC benchmark.

The FAS SINR is lower bounded through the codeword correlation rho, which
turns the outage event into |g_FAS| <= r_th and the outage probability into
the best-port CDF at r_th.
"""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from scipy.special import gammainc

from fblfas.channel import PortCorrelationProfile, SystemConfig
from fblfas.codeword import average_correlation, max_correlation
from fblfas.distribution import amplitude_moments, cdf_exact
from fblfas.quadrature import DEFAULT_QUADRATURE, QuadratureSpec

logger = logging.getLogger(__name__)

CORRELATION_MODES = ("mean", "max")


@dataclass(frozen=True)
class OutageQuery:
    """
    gamma_th is a linear SINR threshold. correlation_mode picks rho_bar
    (mean) or rho_max (max) as the interference correlation.
    """

    gamma_th: float
    config: SystemConfig
    correlation_mode: str = "mean"

    def __post_init__(self) -> None:
        if not self.gamma_th > 0:
            raise ValueError(f"gamma_th must be > 0, got {self.gamma_th}")
        if self.correlation_mode not in CORRELATION_MODES:
            raise ValueError(
                f"correlation_mode must be one of {CORRELATION_MODES}, got {self.correlation_mode}"
            )


@dataclass(frozen=True)
class OutagePoint:
    x_axis: str
    x_value: float
    series: str
    value: float


def outage_points_to_csv(points: Iterable[OutagePoint], path: Optional[Path] = None) -> str:
    """
    CSV with header x_axis,x_value,series,value.
    """
    frame = pd.DataFrame(
        [(p.x_axis, p.x_value, p.series, p.value) for p in points],
        columns=["x_axis", "x_value", "series", "value"],
    )
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format="%.12g")
    text = buffer.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def correlation_for_mode(config: SystemConfig, mode: str = "mean") -> float:
    """
    rho_bar or rho_max for the configuration, 0 for a single user.
    """
    if mode not in CORRELATION_MODES:
        raise ValueError(f"correlation_mode must be one of {CORRELATION_MODES}, got {mode}")
    if config.n_users == 1:
        return 0.0
    if mode == "mean":
        return average_correlation(config.blocklength)
    return max_correlation(config.blocklength, config.n_users)


def sinr_lower_bound_fas(g_amp_sq: float, config: SystemConfig, rho: float) -> float:
    """
    1 / ((U - 1)(1 + U rho) + sigma_eta^2 / |g|^2).
    """
    if g_amp_sq < 0:
        raise ValueError(f"g_amp_sq must be >= 0, got {g_amp_sq}")
    if g_amp_sq == 0:
        return 0.0
    U = config.n_users
    return 1.0 / ((U - 1) * (1.0 + U * rho) + config.noise_var / g_amp_sq)


def sinr_approximation_fas(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    rho: float,
    method: str = "mvti",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """
    E|g|^2 / ((U - 1)(E|g|^2 + U (E|g|)^2 rho) + sigma_eta^2), before the
    interference terms are bounded by E|g|^2.
    """
    mean_amp, mean_power = amplitude_moments(config, profile, method, quad)
    U = config.n_users
    interference = (U - 1) * (mean_power + U * mean_amp**2 * rho)
    return mean_power / (interference + config.noise_var)


def outage_threshold_radius(
    gamma_th: float, config: SystemConfig, rho: float
) -> Optional[float]:
    """
    r_th = sqrt(sigma_eta^2 gamma_th / (1 - (U - 1)(U rho + 1) gamma_th)).
    None when the threshold is above the interference-limited SINR ceiling.
    """
    if not gamma_th > 0:
        raise ValueError(f"gamma_th must be > 0, got {gamma_th}")
    U = config.n_users
    denominator = 1.0 - (U - 1) * (U * rho + 1.0) * gamma_th
    if denominator <= 0:
        return None
    return float(np.sqrt(config.noise_var * gamma_th / denominator))


def outage_fas(
    query: OutageQuery,
    profile: PortCorrelationProfile,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """
    P(SINR lower bound <= gamma_th) = P(|g_FAS| <= r_th), 1 when infeasible.
    """
    rho = correlation_for_mode(query.config, query.correlation_mode)
    r_th = outage_threshold_radius(query.gamma_th, query.config, rho)
    if r_th is None:
        logger.debug(
            f"gamma_th={query.gamma_th:.3g} above the SINR ceiling, outage is certain"
        )
        return 1.0
    return cdf_exact(r_th, query.config, profile, quad)


def mrc_sinr_upper(L: int, U: int, sigma2: float, noise_var: float) -> float:
    """
    4 L^3 sigma^2 / (pi (U - 1) sigma^2 + 4 L^2 sigma_eta^2).
    """
    if L < 1 or U < 1:
        raise ValueError(f"L and U must be >= 1, got L={L}, U={U}")
    if sigma2 <= 0 or noise_var < 0:
        raise ValueError(f"Invalid powers sigma2={sigma2}, noise_var={noise_var}")
    if U == 1 and noise_var == 0:
        raise ValueError("A single user without noise has an unbounded SINR")
    return 4.0 * L**3 * sigma2 / (np.pi * (U - 1) * sigma2 + 4.0 * L**2 * noise_var)


def outage_mrc(gamma_th: float, L: int, U: int, sigma2: float, noise_var: float) -> float:
    """
    1 - exp(-x) sum_{k<L} x^k / k! with x = gamma_th / Gamma_MRC, which is the
    regularized lower incomplete gamma function P(L, x).
    """
    if gamma_th < 0:
        raise ValueError(f"gamma_th must be >= 0, got {gamma_th}")
    x = gamma_th / mrc_sinr_upper(L, U, sigma2, noise_var)
    return float(gammainc(L, x))
