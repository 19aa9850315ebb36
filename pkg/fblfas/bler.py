"""
Block error rate upper bounds.

Chernoff-bounded pairwise errors are combined over every way U' of the U
codewords can be mistaken, each event weighted by the fraction U'/U of
blocks it corrupts. Terms are summed in log space with logsumexp, the raw
union bound can exceed 1 and is reported next to its clamped value.
"""

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np
import numpy.typing as npt
import pandas as pd
from dataclasses_json import dataclass_json
from scipy.special import logsumexp

from fblfas.channel import PortCorrelationProfile, SystemConfig
from fblfas.distribution import pdf_on_grid, tail_radius
from fblfas.quadrature import DEFAULT_QUADRATURE, QuadratureSpec, integrate_relative
from fblfas.special import gauss_q, log_binomial

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

KINDS = ("conditional-fas", "statistical-fas", "l-antenna", "random-coding")


@dataclass_json
@dataclass
class BlerPoint:
    """
    value = min(raw_value, 1).
    """

    snr_db: float
    value: float
    raw_value: float
    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"Unknown BLER kind {self.kind}, expected one of {KINDS}")
        if self.raw_value < 0:
            raise ValueError(f"raw_value must be >= 0, got {self.raw_value}")


def _point(config: SystemConfig, raw: float, kind: str, **params: Any) -> BlerPoint:
    return BlerPoint(
        snr_db=config.snr_db,
        value=min(raw, 1.0),
        raw_value=raw,
        kind=kind,
        params=params,
    )


def bler_points_to_csv(points: Iterable[BlerPoint], path: Optional[Path] = None) -> str:
    """
    CSV with header snr_db,kind,params,value,raw_value.
    """
    frame = pd.DataFrame(
        [
            {
                "snr_db": p.snr_db,
                "kind": p.kind,
                "params": json.dumps(p.params, sort_keys=True),
                "value": p.value,
                "raw_value": p.raw_value,
            }
            for p in points
        ],
        columns=["snr_db", "kind", "params", "value", "raw_value"],
    )
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format="%.12g")
    text = buffer.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def error_noise_var(u_err: int, sigma_c2: float, g_amp: float) -> float:
    """
    Variance 2 U' sigma_c^2 |g|^2 of the difference signal of U' wrong codewords.
    """
    if u_err < 0 or g_amp < 0:
        raise ValueError(f"U' and g_amp must be >= 0, got U'={u_err}, g_amp={g_amp}")
    return 2.0 * u_err * sigma_c2 * g_amp**2


def log_combinatorial_term(U: int, u_err: int) -> float:
    """
    L' = ln C(U, U')^2, the number of (wrong set, replacement set) pairs.
    """
    if not 0 <= u_err <= U:
        raise ValueError(f"U' must be in [0, U], got U'={u_err}, U={U}")
    return 2.0 * float(log_binomial(U, u_err))


def _error_counts(U: int) -> tuple[FloatArray, FloatArray]:
    """
    U' = 1..U and ln(U'/U) + L'. The U' = 0 term carries a zero weight.
    """
    u_err = np.arange(1, U + 1, dtype=np.float64)
    log_weight = np.log(u_err / U) + 2.0 * np.asarray(log_binomial(U, u_err))
    return u_err, log_weight


def conditional_bler_raw(g_amp: npt.ArrayLike, config: SystemConfig) -> FloatArray:
    """
    Unclamped conditional bound for every amplitude in g_amp:
    sum_U' (U'/U) exp(L' - M ln(1 + 0.25 sigma_eta'^2 / sigma_eta^2)).
    """
    g = np.asarray(g_amp, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError(f"g_amp must be >= 0, got {g_amp!r}")
    u_err, log_weight = _error_counts(config.n_users)
    flat = g.ravel()
    error_var = 2.0 * u_err[:, None] * config.sigma_c2 * flat[None, :] ** 2
    exponent = log_weight[:, None] - config.blocklength * np.log1p(
        0.25 * error_var / config.noise_var
    )
    return np.exp(logsumexp(exponent, axis=0)).reshape(g.shape)


def conditional_bler_fas(g_amp: float, config: SystemConfig) -> BlerPoint:
    """
    Bound on the BLER when the selected-port amplitude g_amp is known.
    """
    raw = float(conditional_bler_raw(g_amp, config))
    return _point(config, raw, "conditional-fas", g_amp=float(g_amp))


def statistical_bler_fas(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    density: str = "mvti",
) -> BlerPoint:
    """
    Conditional bound averaged over the density of |g_FAS|, truncated where
    the amplitude tail falls below 1e-10. Small bounds keep the relative
    accuracy of quad rather than its absolute floor.
    """
    r_max = tail_radius(config)

    def integrand(r: FloatArray) -> FloatArray:
        return pdf_on_grid(r, config, profile, density, quad) * conditional_bler_raw(
            r, config
        )

    raw = max(integrate_relative(integrand, 0.0, r_max, quad).value, 0.0)
    logger.debug(f"statistical BLER at {config.snr_db:.2f} dB ({density}): {raw:.4g}")
    return _point(
        config, raw, "statistical-fas", density=density, n_ports=config.n_ports
    )


def bler_l_antenna(L: int, config: SystemConfig) -> BlerPoint:
    """
    Benchmark with L independent unit-gain antennas:
    sum_U' (U'/U) exp(L' - M L ln(1 + 0.5 U' sigma_c^2 / sigma_eta^2)).
    """
    if L < 1:
        raise ValueError(f"Number of antennas must be >= 1, got {L}")
    u_err, log_weight = _error_counts(config.n_users)
    exponent = log_weight - config.blocklength * L * np.log1p(
        0.5 * u_err * config.sigma_c2 / config.noise_var
    )
    raw = float(np.exp(logsumexp(exponent)))
    return _point(config, raw, "l-antenna", L=L)


def random_coding_bler(n0: int, U: int, snr_linear: float) -> float:
    """
    Normal approximation Q((C - R_c) / sqrt(V / n0)) with
    C = log2(1 + snr) / 2, V = snr (snr + 2) / (2 (snr + 1)^2) ln(2)^2
    and R_c = log2(U) / n0.
    """
    if n0 < 1 or U < 1:
        raise ValueError(f"n0 and U must be >= 1, got n0={n0}, U={U}")
    if not snr_linear > 0:
        raise ValueError(f"snr_linear must be > 0, got {snr_linear}")
    capacity = 0.5 * np.log2(1.0 + snr_linear)
    dispersion = (
        snr_linear / 2.0 * (snr_linear + 2.0) / (snr_linear + 1.0) ** 2 * np.log(2.0) ** 2
    )
    rate = np.log2(U) / n0
    return float(gauss_q((capacity - rate) / np.sqrt(dispersion / n0)))


def random_coding_point(config: SystemConfig) -> BlerPoint:
    raw = random_coding_bler(config.blocklength, config.n_users, config.snr())
    return _point(config, raw, "random-coding", n0=config.blocklength)
