"""
Monte-Carlo oracles for the closed forms of the package.

Every estimator draws its trials through fblfas.streams, so a report only
depends on (seed, n_trials). Inside a stream block, trials are simulated in
chunks of a size fixed by the problem dimensions, which keeps memory bounded
without changing the sequence of draws.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt
from dataclasses_json import dataclass_json

from fblfas import streams
from fblfas.channel import PortCorrelationProfile, SystemConfig, sample_channel_batch
from fblfas.distribution import DistributionEval, empirical_distribution

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]
IntArray = npt.NDArray[np.int64]

# complex entries materialized at once by a chunk of trials
CHUNK_ELEMENTS = 2_000_000

MAX_ML_USERS = 6
MAX_ML_BLOCKLENGTH = 10
MAX_ML_CODEBOOK = 64
MAX_ML_HYPOTHESES = 1_000_000


class SearchBudgetError(ValueError):
    """
    The exhaustive maximum-likelihood search would exceed its hypothesis budget.
    """

    def __init__(self, requested: int, allowed: int):
        super().__init__(
            f"Exhaustive search needs {requested} hypotheses per trial, the budget is {allowed}"
        )
        self.requested = requested
        self.allowed = allowed


@dataclass_json
@dataclass(frozen=True)
class McReport:
    """
    Sample mean of a per-trial quantity and its standard error std / sqrt(n).
    """

    quantity: str
    estimate: float
    stderr: float
    n_trials: int
    seed: int


def _report(quantity: str, values: FloatArray, seed: int) -> McReport:
    n = values.size
    stderr = float(np.std(values, ddof=1) / np.sqrt(n)) if n >= 2 else 0.0
    return McReport(
        quantity=quantity,
        estimate=float(np.mean(values)),
        stderr=stderr,
        n_trials=int(n),
        seed=seed,
    )


def _chunk_sizes(size: int, per_trial: int) -> list[int]:
    step = max(1, CHUNK_ELEMENTS // max(per_trial, 1))
    return [min(step, size - start) for start in range(0, size, step)]


def _complex_normal(
    rng: np.random.Generator, variance: float, shape: tuple[int, ...]
) -> ComplexArray:
    scale = np.sqrt(variance / 2.0)
    return rng.normal(0.0, scale, size=shape) + 1j * rng.normal(0.0, scale, size=shape)


def _selected_gains(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    n_trials: int,
    rng: np.random.Generator,
) -> ComplexArray:
    """
    Complex gain of the selected port of every user, shape (n_trials, U).
    """
    U = config.n_users
    batch = sample_channel_batch(config, profile, n_trials * U, rng)
    chosen = batch.gains[np.arange(n_trials * U), batch.selected_index]
    return chosen.reshape(n_trials, U)


def mc_codeword_correlation(
    M: int,
    U: int,
    n_trials: int,
    seed: int,
    sigma_c2: Optional[float] = None,
    n_workers: int = 1,
    progress: bool = False,
) -> tuple[McReport, McReport]:
    """
    Per trial, the mean and the maximum of the U(U-1)/2 normalized pair
    correlations of U Gaussian codewords of length M.
    """
    if U < 2:
        raise ValueError(f"Pair correlations need at least 2 users, got U={U}")
    if M < 1:
        raise ValueError(f"Blocklength must be >= 1, got {M}")
    variance = 1.0 / M if sigma_c2 is None else sigma_c2
    upper = np.triu_indices(U, k=1)

    def block(size: int, rng: np.random.Generator) -> FloatArray:
        out = []
        for chunk in _chunk_sizes(size, U * max(U, M)):
            codewords = _complex_normal(rng, variance, (chunk, U, M))
            unit = codewords / np.linalg.norm(codewords, axis=2, keepdims=True)
            gram = np.abs(np.einsum("tum,tvm->tuv", unit.conj(), unit))
            pairs = gram[:, upper[0], upper[1]]
            out.append(np.stack([pairs.mean(axis=1), pairs.max(axis=1)], axis=1))
        return np.concatenate(out)

    values = np.concatenate(
        streams.map_blocks(
            block,
            n_trials,
            seed,
            streams.StreamTag.CODEWORD,
            n_workers=n_workers,
            progress=progress,
            desc="codeword correlation",
        )
    )
    return _report("rho_bar", values[:, 0], seed), _report("rho_max", values[:, 1], seed)


def mc_gfas(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    n_samples: int,
    seed: int,
    r_grid: Optional[npt.ArrayLike] = None,
    n_workers: int = 1,
    progress: bool = False,
) -> DistributionEval:
    return empirical_distribution(
        config, profile, n_samples, seed, r_grid=r_grid, n_workers=n_workers, progress=progress
    )


def _sinr_terms(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    size: int,
    rng: np.random.Generator,
) -> tuple[FloatArray, FloatArray]:
    """
    Signal power |g_0|^2 of user 0 and interference power
    ||sum_{u>0} g_u x_u||^2 with unit-norm codewords, for size trials.
    """
    U, M = config.n_users, config.blocklength
    signal, interference = [], []
    for chunk in _chunk_sizes(size, U * (M + config.n_ports)):
        gains = _selected_gains(config, profile, chunk, rng)
        codewords = _complex_normal(rng, 1.0, (chunk, U, M))
        codewords /= np.linalg.norm(codewords, axis=2, keepdims=True)
        mixed = np.einsum("tu,tum->tm", gains[:, 1:], codewords[:, 1:, :])
        signal.append(np.abs(gains[:, 0]) ** 2)
        interference.append(np.sum(np.abs(mixed) ** 2, axis=1))
    return np.concatenate(signal), np.concatenate(interference)


def mc_sinr_outage(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    gamma_th: float,
    n_trials: int,
    seed: int,
    n_workers: int = 1,
    progress: bool = False,
) -> McReport:
    """
    Fraction of trials whose realized SINR |g_0|^2 / (||sum_{u>0} g_u x_u||^2 + sigma_eta^2)
    is at or below gamma_th. Interference uses the realized inner products
    between codewords, not a correlation surrogate.
    """
    if n_trials < 100:
        raise ValueError(f"mc_sinr_outage needs at least 100 trials, got {n_trials}")
    if gamma_th < 0:
        raise ValueError(f"gamma_th must be >= 0, got {gamma_th}")

    def block(size: int, rng: np.random.Generator) -> FloatArray:
        signal, interference = _sinr_terms(config, profile, size, rng)
        sinr = signal / (interference + config.noise_var)
        return (sinr <= gamma_th).astype(np.float64)

    values = np.concatenate(
        streams.map_blocks(
            block,
            n_trials,
            seed,
            streams.StreamTag.SINR,
            n_workers=n_workers,
            progress=progress,
            desc="sinr outage",
        )
    )
    return _report("sinr_outage", values, seed)


def mc_sinr_ratio(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    n_trials: int,
    seed: int,
    n_workers: int = 1,
    progress: bool = False,
) -> McReport:
    """
    Ratio of means E[P_S] / (E[P_I] + sigma_eta^2), stderr by the delta method.
    """
    if n_trials < 2:
        raise ValueError(f"mc_sinr_ratio needs at least 2 trials, got {n_trials}")

    def block(size: int, rng: np.random.Generator) -> FloatArray:
        signal, interference = _sinr_terms(config, profile, size, rng)
        return np.stack([signal, interference], axis=1)

    values = np.concatenate(
        streams.map_blocks(
            block,
            n_trials,
            seed,
            streams.StreamTag.SINR,
            n_workers=n_workers,
            progress=progress,
            desc="sinr ratio",
        )
    )
    signal = values[:, 0]
    denominator = values[:, 1] + config.noise_var
    a, b = float(np.mean(signal)), float(np.mean(denominator))
    cov = np.cov(signal, denominator, ddof=1)
    variance = (cov[0, 0] / b**2 - 2 * a * cov[0, 1] / b**3 + a**2 * cov[1, 1] / b**4) / n_trials
    return McReport(
        quantity="sinr_ratio",
        estimate=a / b,
        stderr=float(np.sqrt(max(variance, 0.0))),
        n_trials=n_trials,
        seed=seed,
    )


def ml_hypotheses(U: int, codebook_size: int) -> IntArray:
    """
    Every wrong decision of the detector as a row of U codebook indices.
    The transmitted codewords are 0..U-1. A hypothesis swaps a non-empty set
    of users to distinct codewords taken among the U..K-1 unused ones.
    """
    rows = []
    unused = range(U, codebook_size)
    for n_wrong in range(1, U + 1):
        for wrong_users in itertools.combinations(range(U), n_wrong):
            for replacement in itertools.permutations(unused, n_wrong):
                row = list(range(U))
                for user, codeword in zip(wrong_users, replacement):
                    row[user] = codeword
                rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(-1, U)


def ml_hypothesis_count(U: int, codebook_size: int) -> int:
    spare = codebook_size - U
    return sum(math.comb(U, k) * math.perm(spare, k) for k in range(1, U + 1))


def mc_ml_bler_small(
    config: SystemConfig,
    profile: PortCorrelationProfile,
    n_trials: int,
    seed: int,
    codebook_size: Optional[int] = None,
    max_hypotheses: int = MAX_ML_HYPOTHESES,
    weighting: str = "codeword",
    n_workers: int = 1,
    progress: bool = False,
) -> McReport:
    """
    Exhaustive maximum-likelihood detection with known channel coefficients.

    Per trial a fresh Gaussian codebook of codebook_size entries (2U by
    default) is drawn, users 0..U-1 send codewords 0..U-1 over their selected
    ports and y = sum_u g_u c_u + eta with E||eta||^2 = sigma_eta^2. An error
    occurs when a wrong hypothesis fits y strictly better than the truth. With
    weighting="codeword" the trial scores U'/U, U' being the number of users
    wrong in the best hypothesis, with weighting="block" it scores 1.
    """
    U, M = config.n_users, config.blocklength
    K = 2 * U if codebook_size is None else codebook_size
    if U > MAX_ML_USERS or M > MAX_ML_BLOCKLENGTH or K > MAX_ML_CODEBOOK:
        raise ValueError(
            f"Exhaustive ML is limited to U <= {MAX_ML_USERS}, M <= {MAX_ML_BLOCKLENGTH} "
            f"and a codebook of {MAX_ML_CODEBOOK}, got U={U}, M={M}, K={K}"
        )
    if K <= U:
        raise ValueError(f"Codebook size must exceed U={U}, got {K}")
    if weighting not in ("codeword", "block"):
        raise ValueError(f"weighting must be codeword or block, got {weighting}")
    requested = ml_hypothesis_count(U, K)
    if requested > max_hypotheses:
        raise SearchBudgetError(requested, max_hypotheses)

    hypotheses = ml_hypotheses(U, K)
    n_wrong = np.sum(hypotheses != np.arange(U), axis=1)
    users = np.arange(U)
    logger.debug(f"exhaustive ML over {requested} hypotheses, U={U}, M={M}, K={K}")

    def block(size: int, rng: np.random.Generator) -> FloatArray:
        out = []
        for chunk in _chunk_sizes(size, requested * U * M):
            codebook = _complex_normal(rng, config.sigma_c2, (chunk, K, M))
            gains = _selected_gains(config, profile, chunk, rng)
            noise = _complex_normal(rng, config.noise_var / M, (chunk, M))
            weighted = gains[:, :, None, None] * codebook[:, None, :, :]
            y = np.sum(weighted[:, users, users, :], axis=1) + noise
            guesses = np.sum(weighted[:, users[None, :], hypotheses, :], axis=2)
            metric = np.sum(np.abs(y[:, None, :] - guesses) ** 2, axis=2)
            truth = np.sum(np.abs(noise) ** 2, axis=1)
            best = np.argmin(metric, axis=1)
            wins = metric[np.arange(chunk), best] < truth
            score = n_wrong[best] / U if weighting == "codeword" else np.ones(chunk)
            out.append(np.where(wins, score, 0.0))
        return np.concatenate(out)

    values = np.concatenate(
        streams.map_blocks(
            block,
            n_trials,
            seed,
            streams.StreamTag.ML_DECODER,
            n_workers=n_workers,
            progress=progress,
            desc="exhaustive ML",
        )
    )
    return _report(f"ml_bler_{weighting}", values, seed)
