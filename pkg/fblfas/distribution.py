"""
Distribution of the best-port amplitude |g_FAS| = max_k |g_k|.

Conditioned on the reference port, the other ports are independent Rice
variables, so with t = |g_0|^2 / sigma^2

    C(r) = int_0^{r^2/sigma^2} exp(-t) prod_k [1 - Q1(alpha_k sqrt(t), beta_k r)] dt
    alpha_k = sqrt(2 mu_k^2 / (1 - mu_k^2)),  beta_k = sqrt(2 / (sigma^2 (1 - mu_k^2)))

The exact forms integrate over t, the MVTI forms freeze t at the mean of the
truncated exponential weight and are integral free.
"""

import io
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy import special as sp

from fblfas.channel import PortCorrelationProfile, SystemConfig, draw_best_amplitudes
from fblfas.quadrature import DEFAULT_QUADRATURE, QuadratureSpec, integrate
from fblfas.special import ArrayOrFloat, marcum_q1_pair, scalar_or_array

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

METHODS = ("exact", "mvti", "empirical")

# below this a_r the closed form of the frozen point cancels badly
FROZEN_POINT_SERIES_LIMIT = 1e-3


@dataclass
class DistributionEval:
    """
    CDF and PDF of |g_FAS| on a grid of amplitudes.
    """

    r_grid: FloatArray
    cdf: FloatArray
    pdf: FloatArray
    method: str
    config_hash: str

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"Unknown method {self.method}, expected one of {METHODS}")
        if not (self.r_grid.shape == self.cdf.shape == self.pdf.shape):
            raise ValueError("r_grid, cdf and pdf must have the same shape")

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"r": self.r_grid, "cdf": self.cdf, "pdf": self.pdf, "method": self.method}
        )

    def to_csv(self, path: Optional[Path] = None) -> str:
        """
        CSV with header r,cdf,pdf,method. Written to path when given.
        """
        buffer = io.StringIO()
        self.to_dataframe().to_csv(buffer, index=False, float_format="%.12g")
        text = buffer.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def sup_distance(self, other: "DistributionEval") -> float:
        """
        max |cdf - other.cdf| over the shared grid.
        """
        if not np.array_equal(self.r_grid, other.r_grid):
            raise ValueError("Distributions must share the same r grid")
        return float(np.max(np.abs(self.cdf - other.cdf)))


@dataclass(frozen=True)
class _PortTerms:
    alpha: FloatArray
    beta: FloatArray


def _port_terms(config: SystemConfig, profile: PortCorrelationProfile) -> _PortTerms:
    if profile.n_ports != config.n_ports:
        raise ValueError(
            f"Profile has {profile.n_ports} ports but the configuration has {config.n_ports}"
        )
    mu2 = profile.active_mu() ** 2
    return _PortTerms(
        alpha=np.sqrt(2.0 * mu2 / (1.0 - mu2)),
        beta=np.sqrt(2.0 / (config.channel_var * (1.0 - mu2))),
    )


def _complements(terms: _PortTerms, sqrt_t: FloatArray, r: FloatArray) -> FloatArray:
    """
    1 - Q1(alpha_k sqrt(t), beta_k r), shape (ports, points).
    """
    _, comp = marcum_q1_pair(
        terms.alpha[:, None] * sqrt_t[None, :], terms.beta[:, None] * r[None, :]
    )
    return comp


def _derivatives(terms: _PortTerms, sqrt_t: FloatArray, r: FloatArray) -> FloatArray:
    """
    d/dr [1 - Q1(alpha_k sqrt(t), beta_k r)] with the scaled Bessel function,
    shape (ports, points).
    """
    x = terms.alpha[:, None] * sqrt_t[None, :]
    y = terms.beta[:, None] * r[None, :]
    return terms.beta[:, None] ** 2 * r[None, :] * np.exp(-0.5 * (x - y) ** 2) * sp.ive(0, x * y)


def _leave_one_out(factors: FloatArray) -> FloatArray:
    """
    Product over all rows but one, for every row. Avoids dividing by
    factors that may be 0.
    """
    ones = np.ones((1, factors.shape[1]))
    prefix = np.cumprod(np.vstack([ones, factors[:-1]]), axis=0)
    suffix = np.cumprod(np.vstack([ones, factors[:0:-1]]), axis=0)[::-1]
    return prefix * suffix


def _check_amplitude(r: float) -> float:
    r = float(r)
    if not (np.isfinite(r) and r >= 0):
        raise ValueError(f"Amplitude r must be finite and >= 0, got {r}")
    return r


def cdf_exact(
    r: float,
    config: SystemConfig,
    profile: PortCorrelationProfile,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """
    P(|g_FAS| <= r) by adaptive quadrature over the reference-port energy.
    Perfectly correlated ports are implied by the reference port and dropped.
    """
    r = _check_amplitude(r)
    terms = _port_terms(config, profile)
    if r == 0.0:
        return 0.0
    upper = r * r / config.channel_var
    if terms.alpha.size == 0:
        return float(-np.expm1(-upper))
    r_vec = np.array([r])

    def integrand(t: FloatArray) -> FloatArray:
        comp = _complements(terms, np.sqrt(t), np.broadcast_to(r_vec, t.shape))
        return np.exp(-t) * np.prod(comp, axis=0)

    value = integrate(integrand, 0.0, upper, quad).value
    return float(np.clip(value, 0.0, 1.0))


def pdf_exact(
    r: float,
    config: SystemConfig,
    profile: PortCorrelationProfile,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """
    Density of |g_FAS|, derivative of cdf_exact: the boundary term of the
    moving upper limit plus one integral per port of the derivative of its
    Marcum factor.
    """
    r = _check_amplitude(r)
    terms = _port_terms(config, profile)
    if r == 0.0:
        return 0.0
    sigma2 = config.channel_var
    upper = r * r / sigma2
    r_vec = np.array([r])
    boundary = 2.0 * r / sigma2 * np.exp(-upper)
    if terms.alpha.size == 0:
        return float(boundary)
    boundary *= float(np.prod(_complements(terms, np.sqrt(np.array([upper])), r_vec)))

    def integrand(t: FloatArray) -> FloatArray:
        sqrt_t = np.sqrt(t)
        r_nodes = np.broadcast_to(r_vec, t.shape)
        comp = _complements(terms, sqrt_t, r_nodes)
        deriv = _derivatives(terms, sqrt_t, r_nodes)
        return np.exp(-t) * np.sum(_leave_one_out(comp) * deriv, axis=0)

    value = boundary + integrate(integrand, 0.0, upper, quad).value
    return max(float(value), 0.0)


def frozen_point(a_r: npt.ArrayLike) -> ArrayOrFloat:
    """
    Mean of t over [0, a_r] under the weight exp(-t):
    (1 - (1 + a_r) exp(-a_r)) / (1 - exp(-a_r)) = 1 - a_r / expm1(a_r).
    """
    a = np.asarray(a_r, dtype=np.float64)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError(f"a_r must be finite and >= 0, got {a_r!r}")
    small = a < FROZEN_POINT_SERIES_LIMIT
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        closed = 1.0 - a / np.expm1(a)
    series = a / 2.0 - a**2 / 12.0 + a**4 / 720.0
    return scalar_or_array(np.where(small, series, closed))


def _as_grid(r: npt.ArrayLike) -> FloatArray:
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(r_arr < 0) or not np.all(np.isfinite(r_arr)):
        raise ValueError(f"Amplitudes must be finite and >= 0, got {r!r}")
    return r_arr


def cdf_mvti(
    r: npt.ArrayLike, config: SystemConfig, profile: PortCorrelationProfile
) -> ArrayOrFloat:
    """
    (1 - exp(-r^2/sigma^2)) prod_k [1 - Q1(alpha_k sqrt(t_bar), beta_k r)]
    with t_bar = frozen_point(r^2/sigma^2).
    """
    r_arr = _as_grid(r)
    terms = _port_terms(config, profile)
    flat = r_arr.ravel()
    a = flat**2 / config.channel_var
    values = -np.expm1(-a)
    if terms.alpha.size > 0:
        t_bar = np.asarray(frozen_point(a), dtype=np.float64).reshape(flat.shape)
        values = values * np.prod(_complements(terms, np.sqrt(t_bar), flat), axis=0)
    return scalar_or_array(values.reshape(r_arr.shape))


def pdf_mvti(
    r: npt.ArrayLike, config: SystemConfig, profile: PortCorrelationProfile
) -> ArrayOrFloat:
    """
    Integral-free density: the exact boundary term plus
    (1 - exp(-r^2/sigma^2)) sum_i prod_{k != i}[...](t_bar) d_i(t_bar).
    Clamped at 0 from below.
    """
    r_arr = _as_grid(r)
    terms = _port_terms(config, profile)
    sigma2 = config.channel_var
    flat = r_arr.ravel()
    a = flat**2 / sigma2
    boundary = 2.0 * flat / sigma2 * np.exp(-a)
    if terms.alpha.size == 0:
        return scalar_or_array(boundary.reshape(r_arr.shape))
    boundary = boundary * np.prod(_complements(terms, np.sqrt(a), flat), axis=0)
    sqrt_t_bar = np.sqrt(np.asarray(frozen_point(a), dtype=np.float64).reshape(flat.shape))
    comp = _complements(terms, sqrt_t_bar, flat)
    deriv = _derivatives(terms, sqrt_t_bar, flat)
    correction = -np.expm1(-a) * np.sum(_leave_one_out(comp) * deriv, axis=0)
    values = boundary + correction
    if np.any(values < -1e-12):
        warnings.warn(
            f"MVTI density dipped to {values.min():.3g}, clamped to 0", RuntimeWarning
        )
    return scalar_or_array(np.maximum(values, 0.0).reshape(r_arr.shape))


def tail_radius(config: SystemConfig, tail: float = 1e-10) -> float:
    """
    Amplitude above which P(|g_FAS| > r) <= tail, from the union bound
    N exp(-r^2/sigma^2).
    """
    if not 0 < tail < 1:
        raise ValueError(f"tail must be in (0, 1), got {tail}")
    return float(np.sqrt(config.channel_var * np.log(config.n_ports / tail)))


def _exact_on_grid(
    fn: Callable[[float, SystemConfig, PortCorrelationProfile, QuadratureSpec], float],
    r: FloatArray,
    config: SystemConfig,
    profile: PortCorrelationProfile,
    quad: QuadratureSpec,
) -> FloatArray:
    return np.array([fn(float(x), config, profile, quad) for x in r.ravel()]).reshape(
        r.shape
    )


def cdf_on_grid(
    r: npt.ArrayLike,
    config: SystemConfig,
    profile: PortCorrelationProfile,
    method: str = "mvti",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> FloatArray:
    r_arr = _as_grid(r)
    if method == "mvti":
        return np.asarray(cdf_mvti(r_arr, config, profile), dtype=np.float64)
    if method == "exact":
        return _exact_on_grid(cdf_exact, r_arr, config, profile, quad)
    raise ValueError(f"Unknown analytic method {method}, expected exact or mvti")


def pdf_on_grid(
    r: npt.ArrayLike,
    config: SystemConfig,
    profile: PortCorrelationProfile,
    method: str = "mvti",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> FloatArray:
    r_arr = _as_grid(r)
    if method == "mvti":
        return np.asarray(pdf_mvti(r_arr, config, profile), dtype=np.float64)
    if method == "exact":
        return _exact_on_grid(pdf_exact, r_arr, config, profile, quad)
    raise ValueError(f"Unknown analytic method {method}, expected exact or mvti")


def evaluate_distribution(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    r_grid: npt.ArrayLike,
    method: str = "mvti",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> DistributionEval:
    """
    Analytic CDF and PDF on r_grid. Quadrature noise that would make the
    CDF decrease along the grid is removed.
    """
    grid = _as_grid(r_grid).ravel()
    if np.any(np.diff(grid) <= 0):
        raise ValueError("r_grid must be strictly increasing")
    cdf = np.clip(cdf_on_grid(grid, config, profile, method, quad), 0.0, 1.0)
    pdf = pdf_on_grid(grid, config, profile, method, quad)
    return DistributionEval(
        r_grid=grid,
        cdf=np.maximum.accumulate(cdf),
        pdf=pdf,
        method=method,
        config_hash=config.fingerprint(),
    )


def empirical_from_samples(
    samples: FloatArray, r_grid: FloatArray, config_hash: str = ""
) -> DistributionEval:
    """
    Empirical CDF of samples on r_grid, density from a Freedman-Diaconis histogram.
    """
    ordered = np.sort(samples)
    cdf = np.searchsorted(ordered, r_grid, side="right") / ordered.size
    density, edges = np.histogram(ordered, bins="fd", density=True)
    bin_index = np.searchsorted(edges, r_grid, side="right") - 1
    inside = (bin_index >= 0) & (bin_index < density.size)
    pdf = np.where(inside, density[np.clip(bin_index, 0, density.size - 1)], 0.0)
    return DistributionEval(
        r_grid=r_grid,
        cdf=cdf.astype(np.float64),
        pdf=pdf.astype(np.float64),
        method="empirical",
        config_hash=config_hash,
    )


def empirical_distribution(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    n_samples: int,
    seed: int,
    r_grid: Optional[npt.ArrayLike] = None,
    n_points: int = 200,
    n_workers: int = 1,
    progress: bool = False,
) -> DistributionEval:
    """
    Monte-Carlo CDF and PDF of |g_FAS| from n_samples channel draws.
    Without r_grid, n_points uniform amplitudes from 0 to twice the largest draw.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    samples = draw_best_amplitudes(
        config, profile, n_samples, seed, n_workers=n_workers, progress=progress
    )
    if r_grid is None:
        grid = np.linspace(0.0, 2.0 * float(samples.max()), n_points)
    else:
        grid = _as_grid(r_grid).ravel()
    logger.debug(f"empirical |g_FAS| distribution from {n_samples} draws")
    return empirical_from_samples(samples, grid, config.fingerprint())


def amplitude_moments(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    method: str = "mvti",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> tuple[float, float]:
    """
    (E|g_FAS|, E|g_FAS|^2) as int (1 - C) dr and int 2r (1 - C) dr.
    """
    r_max = tail_radius(config)

    def survival(r: FloatArray) -> FloatArray:
        return 1.0 - cdf_on_grid(r, config, profile, method, quad)

    first = integrate(survival, 0.0, r_max, quad).value
    second = integrate(lambda r: 2.0 * r * survival(r), 0.0, r_max, quad).value
    return first, second


