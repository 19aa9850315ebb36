"""
Scenario configuration, port correlation profile and correlated FAS channel draws.

Ports are indexed from 0; port 0 is the reference port whose correlation
with itself is 1.
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
import numpy.typing as npt
from dataclasses_json import dataclass_json

from fblfas import streams
from fblfas.special import bessel_j0

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]
IntArray = npt.NDArray[np.int64]

# |mu| above 1 - DEGENERATE_EPS is treated as a copy of the reference port
DEGENERATE_EPS = 1e-9


def _as_count(value: float, name: str, minimum: int = 1) -> int:
    if float(value) != int(value):
        raise ValueError(f"{name} must be an integer, got {value}")
    if int(value) < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


@dataclass_json
@dataclass(frozen=True, slots=True)
class SystemConfig:
    """
    All scenario parameters.

    n_ports: number of FAS ports N
    aperture_w: aperture length W, in wavelengths
    channel_var: E[|g|^2] of every port, sigma^2
    noise_var: noise energy sigma_eta^2 over the block
    blocklength: channel uses per block M
    n_users: number of simultaneous codewords U
    codeword_var: per-symbol codeword variance sigma_c^2, defaults to 1/M
    """

    n_ports: int = 10
    aperture_w: float = 0.5
    channel_var: float = 1.0
    noise_var: float = 1.0
    blocklength: int = 5
    n_users: int = 10
    codeword_var: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_ports", _as_count(self.n_ports, "n_ports"))
        object.__setattr__(self, "blocklength", _as_count(self.blocklength, "blocklength"))
        object.__setattr__(self, "n_users", _as_count(self.n_users, "n_users"))
        for name in ("aperture_w", "channel_var", "noise_var"):
            value = float(getattr(self, name))
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")
            object.__setattr__(self, name, value)
        if self.codeword_var is None:
            object.__setattr__(self, "codeword_var", 1.0 / self.blocklength)
        elif not (np.isfinite(self.codeword_var) and self.codeword_var > 0):
            raise ValueError(f"codeword_var must be finite and > 0, got {self.codeword_var}")
        else:
            object.__setattr__(self, "codeword_var", float(self.codeword_var))

    @property
    def sigma_c2(self) -> float:
        assert self.codeword_var is not None
        return self.codeword_var

    def snr(self) -> float:
        """
        Linear SNR sigma^2 / sigma_eta^2.
        """
        return self.channel_var / self.noise_var

    @property
    def snr_db(self) -> float:
        return float(10.0 * np.log10(self.snr()))

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        """
        Same scenario with sigma_eta^2 = sigma^2 / 10^(snr_db/10).
        """
        return replace(self, noise_var=self.channel_var / 10.0 ** (snr_db / 10.0))

    def with_updates(self, **changes: Any) -> "SystemConfig":
        """
        replace() where a codeword variance left at its 1/M default follows a
        new blocklength. An snr_db change sets noise_var.
        """
        snr_db = changes.pop("snr_db", None)
        if (
            "blocklength" in changes
            and "codeword_var" not in changes
            and math.isclose(self.sigma_c2, 1.0 / self.blocklength)
        ):
            changes["codeword_var"] = None
        updated = replace(self, **changes)
        return updated if snr_db is None else updated.with_snr_db(float(snr_db))

    def fingerprint(self) -> str:
        """
        Short stable identifier of the configuration.
        """
        return hashlib.sha256(self.to_json(sort_keys=True).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class PortCorrelationProfile:
    """
    Correlation mu_k of every port with the reference port.
    degenerate_ports holds the indices k >= 1 with |mu_k| >= 1 - DEGENERATE_EPS.
    """

    mu: FloatArray
    degenerate_ports: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.size < 1:
            raise ValueError(f"mu must be a non-empty vector, got shape {mu.shape}")
        if mu[0] != 1.0:
            raise ValueError(f"mu[0] must be exactly 1, got {mu[0]}")
        if np.any(np.abs(mu) > 1.0):
            raise ValueError("every |mu_k| must be <= 1")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def n_ports(self) -> int:
        return int(self.mu.size)

    def active_mu(self) -> FloatArray:
        """
        mu_k of the non-reference, non-degenerate ports.
        """
        keep = [k for k in range(1, self.n_ports) if k not in self.degenerate_ports]
        return self.mu[keep]


def _profile(mu: FloatArray) -> PortCorrelationProfile:
    degenerate = frozenset(
        int(k) for k in np.flatnonzero(np.abs(mu) >= 1.0 - DEGENERATE_EPS) if k > 0
    )
    if degenerate:
        logger.debug(f"ports {sorted(degenerate)} are copies of the reference port")
    return PortCorrelationProfile(mu=mu, degenerate_ports=degenerate)


def port_correlations(n_ports: int, aperture_w: float) -> PortCorrelationProfile:
    """
    mu_k = J0(2 pi k W / (N - 1)) for ports k = 0..N-1 evenly spread over
    the aperture. A single port gives the profile {1}.
    """
    n_ports = _as_count(n_ports, "n_ports")
    if not aperture_w > 0:
        raise ValueError(f"aperture_w must be > 0, got {aperture_w}")
    if n_ports == 1:
        return PortCorrelationProfile(mu=np.ones(1))
    offsets = np.arange(n_ports) * aperture_w / (n_ports - 1)
    return port_correlations_from_offsets(offsets)


def port_correlations_from_offsets(offsets: npt.ArrayLike) -> PortCorrelationProfile:
    """
    Profile of ports placed at the given distances (in wavelengths) from the
    reference port. offsets[0] must be 0.
    """
    d = np.asarray(offsets, dtype=np.float64)
    if d.ndim != 1 or d.size < 1 or d[0] != 0.0:
        raise ValueError(f"offsets must be a vector starting at 0, got {offsets!r}")
    mu = np.asarray(bessel_j0(2.0 * np.pi * d), dtype=np.float64).reshape(d.shape)
    mu[0] = 1.0
    return _profile(mu)


def profile_for(config: SystemConfig) -> PortCorrelationProfile:
    return port_correlations(config.n_ports, config.aperture_w)


@dataclass(frozen=True)
class ChannelSample:
    gains: ComplexArray
    selected_index: int
    selected_amp: float


@dataclass(frozen=True)
class ChannelBatch:
    """
    n independent draws, gains has shape (n, N).
    """

    gains: ComplexArray
    selected_index: IntArray
    selected_amp: FloatArray


def _check_consistent(config: SystemConfig, profile: PortCorrelationProfile) -> None:
    if profile.n_ports != config.n_ports:
        raise ValueError(
            f"Profile has {profile.n_ports} ports but the configuration has {config.n_ports}"
        )


def sample_channel_batch(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    n: int,
    rng: np.random.Generator,
) -> ChannelBatch:
    """
    g_k = sigma (sqrt(1 - mu_k^2) x_k + mu_k x_0) + j sigma (sqrt(1 - mu_k^2) y_k + mu_k y_0)
    with x, y i.i.d. N(0, 1/2), followed by best-port selection.
    """
    _check_consistent(config, profile)
    sigma = np.sqrt(config.channel_var)
    mu = profile.mu
    spread = np.sqrt(np.clip(1.0 - mu**2, 0.0, None))
    scale = np.sqrt(0.5)

    x0 = rng.normal(0.0, scale, size=(n, 1))
    y0 = rng.normal(0.0, scale, size=(n, 1))
    xk = rng.normal(0.0, scale, size=(n, profile.n_ports))
    yk = rng.normal(0.0, scale, size=(n, profile.n_ports))
    gains = sigma * ((spread * xk + mu * x0) + 1j * (spread * yk + mu * y0))

    reference = sigma * (x0[:, 0] + 1j * y0[:, 0])
    gains[:, 0] = reference
    for k in profile.degenerate_ports:
        gains[:, k] = np.sign(mu[k]) * reference

    amplitude = np.abs(gains)
    index = np.argmax(amplitude, axis=1)
    return ChannelBatch(
        gains=gains,
        selected_index=index.astype(np.int64),
        selected_amp=amplitude[np.arange(n), index],
    )


def sample_channels(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    rng: np.random.Generator,
) -> ChannelSample:
    """
    One user's port gains and its selected port.
    """
    batch = sample_channel_batch(config, profile, 1, rng)
    return ChannelSample(
        gains=batch.gains[0],
        selected_index=int(batch.selected_index[0]),
        selected_amp=float(batch.selected_amp[0]),
    )


def draw_best_amplitudes(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    n_samples: int,
    seed: int,
    n_workers: int = 1,
    progress: bool = False,
) -> FloatArray:
    """
    n_samples independent draws of |g_FAS|, reproducible from seed.
    """

    def block(size: int, rng: np.random.Generator) -> FloatArray:
        return sample_channel_batch(config, profile, size, rng).selected_amp

    parts = streams.map_blocks(
        block,
        n_samples,
        seed,
        streams.StreamTag.CHANNEL,
        n_workers=n_workers,
        progress=progress,
        desc="channel draws",
    )
    return np.concatenate(parts)


def select_port(gains: npt.ArrayLike) -> tuple[int, float]:
    """
    Index and amplitude of the strongest port, ties going to the lowest index.
    """
    amplitude = np.abs(np.asarray(gains))
    if amplitude.ndim != 1 or amplitude.size == 0:
        raise ValueError("select_port needs a non-empty vector of port gains")
    index = int(np.argmax(amplitude))
    return index, float(amplitude[index])
