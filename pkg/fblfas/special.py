"""
Special functions used by every closed-form expression of the package.

All functions accept python scalars or numpy arrays and broadcast like numpy
ufuncs. Scalar inputs give python floats back.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
import numpy.typing as npt
from scipy import special as sp

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ArrayOrFloat = Union[float, FloatArray]

# Above this value of a*b the Bessel series needs too many terms, the
# Marcum function is then integrated over a window around the Rice peak.
SERIES_PRODUCT_LIMIT = 30.0

# Half-width (in units of the unit-variance Gaussian kernel) of that window.
QUADRATURE_WINDOW = 12.0
QUADRATURE_PANELS = 12
QUADRATURE_NODES = 10


@dataclass(frozen=True, slots=True)
class AccuracyBudget:
    """
    Stopping rule of the series expansions.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_terms: int = 10_000

    def __post_init__(self) -> None:
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError(
                f"Tolerances must be strictly positive, got abs_tol={self.abs_tol}, rel_tol={self.rel_tol}"
            )
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_BUDGET = AccuracyBudget()


def _as_real(x: npt.ArrayLike, name: str) -> FloatArray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return arr


def _as_non_negative(x: npt.ArrayLike, name: str) -> FloatArray:
    arr = _as_real(x, name)
    if np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative, got {x!r}")
    return arr


def scalar_or_array(values: FloatArray) -> ArrayOrFloat:
    if values.ndim == 0:
        return float(values)
    return values


def bessel_j0(x: npt.ArrayLike) -> ArrayOrFloat:
    """
    Bessel function of the first kind of order zero.
    """
    return scalar_or_array(np.asarray(sp.j0(_as_real(x, "x")), dtype=np.float64))


def bessel_i0(x: npt.ArrayLike) -> ArrayOrFloat:
    """
    Modified Bessel function of the first kind of order zero.
    Overflows to inf near x = 713, use bessel_i0_scaled inside products.
    """
    return scalar_or_array(np.asarray(sp.i0(_as_real(x, "x")), dtype=np.float64))


def bessel_i0_scaled(x: npt.ArrayLike) -> ArrayOrFloat:
    """
    exp(-x) * I0(x) for x >= 0, bounded in (0, 1].
    """
    return scalar_or_array(np.asarray(sp.i0e(_as_non_negative(x, "x")), dtype=np.float64))


def gauss_q(x: npt.ArrayLike) -> ArrayOrFloat:
    """
    Gaussian tail probability Q(x) = P(Z > x) for a standard normal Z.
    """
    return scalar_or_array(np.asarray(sp.ndtr(-_as_real(x, "x")), dtype=np.float64))


def log_binomial(n: npt.ArrayLike, k: npt.ArrayLike) -> ArrayOrFloat:
    """
    Natural logarithm of the binomial coefficient C(n, k).

    Evaluated through log-beta, which keeps 1e-10 relative accuracy for n up
    to 1e6 where the difference of three log-gamma values would not.
    """
    n_arr = _as_non_negative(n, "n")
    k_arr = _as_non_negative(k, "k")
    if np.any(k_arr > n_arr):
        raise ValueError(f"log_binomial requires 0 <= k <= n, got n={n!r}, k={k!r}")
    n_arr, k_arr = np.broadcast_arrays(n_arr, k_arr)
    edge = (k_arr == 0) | (k_arr == n_arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = -np.log(n_arr + 1.0) - sp.betaln(n_arr - k_arr + 1.0, k_arr + 1.0)
    return scalar_or_array(np.where(edge, 0.0, values))


def _series_sum(
    log_ratio: FloatArray,
    product: FloatArray,
    first_order: int,
    budget: AccuracyBudget,
) -> FloatArray:
    """
    Sum over k >= first_order of ratio**k * ive(k, product).

    Terms are formed in log space so that a large ratio paired with an
    underflowing Bessel value gives 0 instead of inf * 0. Every caller
    guarantees the terms decrease with k, so the first negligible term
    stops the summation.
    """
    total = np.zeros_like(product)
    active = np.ones(product.shape, dtype=bool)
    for order in range(first_order, first_order + budget.max_terms):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            term = np.exp(order * log_ratio + np.log(sp.ive(order, product)))
        term = np.where(active, np.nan_to_num(term, nan=0.0, posinf=0.0), 0.0)
        total += term
        active &= term > budget.rel_tol * total
        active &= term > np.finfo(np.float64).tiny
        if not np.any(active):
            return total
    warnings.warn(
        f"Marcum Q series did not settle within {budget.max_terms} terms",
        RuntimeWarning,
    )
    return total


def _window_integral(a: FloatArray, lo: FloatArray, hi: FloatArray) -> FloatArray:
    """
    Integral of t*exp(-(t-a)^2/2)*i0e(a*t) over [lo, hi], composite
    Gauss-Legendre with fixed panels.
    """
    nodes, weights = np.polynomial.legendre.leggauss(QUADRATURE_NODES)
    width = (hi - lo)[:, None] / QUADRATURE_PANELS
    panel_start = lo[:, None] + width * np.arange(QUADRATURE_PANELS)[None, :]
    t = panel_start[:, :, None] + 0.5 * width[:, :, None] * (nodes + 1.0)
    a3 = a[:, None, None]
    values = t * np.exp(-0.5 * (t - a3) ** 2) * sp.ive(0, a3 * t)
    return np.sum(0.5 * width[:, :, None] * weights * values, axis=(1, 2))


def marcum_q1_pair(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    budget: AccuracyBudget = DEFAULT_BUDGET,
) -> tuple[FloatArray, FloatArray]:
    """
    First-order Marcum Q function and its complement, (Q1(a, b), 1 - Q1(a, b)).

    Both members are computed directly in the regime where they are small so
    that products of many complements, as in the best-port CDF, keep their
    relative accuracy.

    For a*b <= 30 the modified-Bessel series are used with exponentially
    scaled Bessel values:
        Q1     = exp(-(a-b)^2/2) * sum_{k>=0} (a/b)^k ive(k, ab)   (a < b)
        1 - Q1 = exp(-(a-b)^2/2) * sum_{k>=1} (b/a)^k ive(k, ab)   (a >= b)
    Beyond, the defining integral is evaluated on a window of the Rice
    density where it is not negligible.
    """
    a_arr = _as_non_negative(a, "a")
    b_arr = _as_non_negative(b, "b")
    a_arr, b_arr = np.broadcast_arrays(a_arr, b_arr)
    shape = a_arr.shape
    a1 = a_arr.ravel().astype(np.float64)
    b1 = b_arr.ravel().astype(np.float64)

    q = np.ones_like(a1)
    comp = np.zeros_like(a1)

    zero_a = (a1 == 0) & (b1 > 0)
    q[zero_a] = np.exp(-0.5 * b1[zero_a] ** 2)
    comp[zero_a] = -np.expm1(-0.5 * b1[zero_a] ** 2)

    rest = (a1 > 0) & (b1 > 0)
    product = a1 * b1
    in_series = rest & (product <= SERIES_PRODUCT_LIMIT)
    in_window = rest & (product > SERIES_PRODUCT_LIMIT)

    # complement series: a >= b, or b small enough for (b/a)^k I_k(ab) to decay
    comp_series = in_series & ((a1 >= b1) | (b1 <= 1.0))
    if np.any(comp_series):
        aa, bb = a1[comp_series], b1[comp_series]
        scale = np.exp(-0.5 * (aa - bb) ** 2)
        value = scale * _series_sum(np.log(bb / aa), aa * bb, 1, budget)
        comp[comp_series] = np.clip(value, 0.0, 1.0)
        q[comp_series] = 1.0 - comp[comp_series]

    q_series = in_series & ~comp_series
    if np.any(q_series):
        aa, bb = a1[q_series], b1[q_series]
        scale = np.exp(-0.5 * (aa - bb) ** 2)
        value = scale * _series_sum(np.log(aa / bb), aa * bb, 0, budget)
        q[q_series] = np.clip(value, 0.0, 1.0)
        comp[q_series] = 1.0 - q[q_series]

    upper_tail = in_window & (b1 >= a1)
    if np.any(upper_tail):
        aa, bb = a1[upper_tail], b1[upper_tail]
        value = _window_integral(aa, bb, bb + QUADRATURE_WINDOW)
        q[upper_tail] = np.clip(value, 0.0, 1.0)
        comp[upper_tail] = 1.0 - q[upper_tail]

    lower_tail = in_window & (b1 < a1)
    if np.any(lower_tail):
        aa, bb = a1[lower_tail], b1[lower_tail]
        lo = np.maximum(0.0, aa - QUADRATURE_WINDOW)
        value = np.where(bb > lo, _window_integral(aa, lo, np.maximum(bb, lo)), 0.0)
        comp[lower_tail] = np.clip(value, 0.0, 1.0)
        q[lower_tail] = 1.0 - comp[lower_tail]

    return q.reshape(shape), comp.reshape(shape)


def marcum_q1(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    budget: AccuracyBudget = DEFAULT_BUDGET,
) -> ArrayOrFloat:
    """
    First-order Marcum Q function Q1(a, b) = int_b^inf t exp(-(t^2+a^2)/2) I0(a t) dt.
    """
    q, _ = marcum_q1_pair(a, b, budget)
    return scalar_or_array(q)
