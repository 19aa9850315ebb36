"""
Correlation statistics of random Gaussian codewords at finite blocklength.

The pair correlation rho_ij = |c_i^H c_j| / (||c_i|| ||c_j||) of two
independent codewords of length M is approximately Rayleigh with
E[rho^2] = 1/M. The maximum over T = U(U-1)/2 pairs is treated as the
maximum of T independent such variables and standardized to a Gumbel law.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from dataclasses_json import dataclass_json
from scipy.stats import gamma, gumbel_r

from fblfas.special import ArrayOrFloat, scalar_or_array

EULER_GAMMA = float(np.euler_gamma)


@dataclass_json
@dataclass(frozen=True, slots=True)
class CorrelationStats:
    """
    Mean and maximum pair correlation of U codewords. source is analytic or empirical.
    """

    rho_bar: float
    rho_max: float
    pair_count: int
    source: str = "analytic"

    def __post_init__(self) -> None:
        if self.source not in ("analytic", "empirical"):
            raise ValueError(f"source must be analytic or empirical, got {self.source}")


@dataclass(frozen=True, slots=True)
class GumbelParams:
    """
    location = sqrt(ln T / M), scale = 1 / (2 sqrt(M ln T)).
    """

    location: float
    scale: float

    @property
    def mean(self) -> float:
        return self.location + self.scale * EULER_GAMMA

    @property
    def median(self) -> float:
        return self.location - self.scale * float(np.log(np.log(2.0)))


def _check_blocklength(M: int) -> None:
    if M < 1:
        raise ValueError(f"Blocklength must be >= 1, got {M}")


def pair_count(U: int) -> int:
    if U < 1:
        raise ValueError(f"Number of users must be >= 1, got {U}")
    return U * (U - 1) // 2


def average_correlation(M: int) -> float:
    """
    rho_bar ~ sqrt(pi / (4 M)), independent of the number of users.
    """
    _check_blocklength(M)
    return float(np.sqrt(np.pi / (4.0 * M)))


def gumbel_params(M: int, T: int) -> GumbelParams:
    _check_blocklength(M)
    if T < 2:
        raise ValueError(f"The Gumbel standardization needs at least 2 pairs, got T={T}")
    log_t = np.log(T)
    return GumbelParams(
        location=float(np.sqrt(log_t / M)),
        scale=float(1.0 / (2.0 * np.sqrt(M * log_t))),
    )


def max_correlation(M: int, U: int) -> float:
    """
    rho_max ~ sqrt(ln T / M) + gamma / (2 sqrt(M ln T)) with T = U(U-1)/2,
    the mean of the Gumbel approximation of the largest pair correlation.
    """
    if U < 2:
        raise ValueError(f"The maximum correlation needs at least 2 users, got U={U}")
    return gumbel_params(M, pair_count(U)).mean


def analytic_correlation_stats(M: int, U: int) -> CorrelationStats:
    return CorrelationStats(
        rho_bar=average_correlation(M),
        rho_max=max_correlation(M, U),
        pair_count=pair_count(U),
        source="analytic",
    )


def pair_correlation_pdf(r: npt.ArrayLike, M: int, sigma_c2: float) -> ArrayOrFloat:
    """
    Rayleigh density of the unnormalized inner product |c_i^H c_j|,
    2r/(M sigma_c^4) exp(-r^2/(M sigma_c^4)).
    """
    _check_blocklength(M)
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(r_arr < 0):
        raise ValueError(f"r must be non-negative, got {r!r}")
    spread = M * sigma_c2**2
    return scalar_or_array(2.0 * r_arr / spread * np.exp(-(r_arr**2) / spread))


def normalized_correlation_pdf(x: npt.ArrayLike, M: int) -> ArrayOrFloat:
    """
    Density 2 M x exp(-M x^2) of a single normalized pair correlation.
    """
    _check_blocklength(M)
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(x_arr < 0):
        raise ValueError(f"x must be non-negative, got {x!r}")
    return scalar_or_array(2.0 * M * x_arr * np.exp(-M * x_arr**2))


def normalized_correlation_cdf(x: npt.ArrayLike, M: int) -> ArrayOrFloat:
    _check_blocklength(M)
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(x_arr < 0):
        raise ValueError(f"x must be non-negative, got {x!r}")
    return scalar_or_array(-np.expm1(-M * x_arr**2))


def max_correlation_cdf(x: npt.ArrayLike, M: int, T: int) -> ArrayOrFloat:
    """
    P(rho_max <= x) = (1 - exp(-M x^2))^T, evaluated as exp(T log1p(-exp(-M x^2))).
    """
    _check_blocklength(M)
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(x_arr < 0):
        raise ValueError(f"x must be non-negative, got {x!r}")
    with np.errstate(divide="ignore"):
        values = np.exp(T * np.log1p(-np.exp(-M * x_arr**2)))
    return scalar_or_array(values)


def _check_scale(b: float) -> None:
    if b <= 0:
        raise ValueError(f"Gumbel scale must be > 0, got {b}")


def gumbel_cdf(z: npt.ArrayLike, a: float = 0.0, b: float = 1.0) -> ArrayOrFloat:
    """
    exp(-exp(-(z - a) / b)), location a and scale b.
    """
    _check_scale(b)
    return scalar_or_array(np.asarray(gumbel_r(loc=a, scale=b).cdf(z), dtype=np.float64))


def gumbel_pdf(z: npt.ArrayLike, a: float = 0.0, b: float = 1.0) -> ArrayOrFloat:
    _check_scale(b)
    return scalar_or_array(np.asarray(gumbel_r(loc=a, scale=b).pdf(z), dtype=np.float64))


def gumbel_max_correlation_cdf(x: npt.ArrayLike, M: int, T: int) -> ArrayOrFloat:
    """
    Gumbel approximation of max_correlation_cdf.
    """
    params = gumbel_params(M, T)
    return gumbel_cdf(x, params.location, params.scale)


def codeword_norm_pdf(y: npt.ArrayLike, M: int, sigma_c2: float) -> ArrayOrFloat:
    """
    Density of ||c||^2, Gamma distributed with shape M and scale sigma_c^2.
    """
    _check_blocklength(M)
    return scalar_or_array(np.asarray(gamma(a=M, scale=sigma_c2).pdf(y), dtype=np.float64))


def codeword_norm_normal_approx(M: int, sigma_c2: float) -> tuple[float, float]:
    """
    (mean, variance) = (M sigma_c^2, M sigma_c^4) of the large-M normal limit of ||c||^2.
    """
    _check_blocklength(M)
    return M * sigma_c2, M * sigma_c2**2
