"""Fixed-effect data generation and Monte Carlo comparison of the estimators.

Data are drawn as a low-rank structure plus iid Gaussian noise. Two signal
generators are provided: ``replication`` builds each variable by copying one
of a set of orthonormal vectors (so the signal eigenvalues equal the copy
counts), and ``gaussian_factors`` multiplies two iid Gaussian factor blocks
(all dimensions of the same expected strength). ``run_benchmark`` fits the
requested estimators replicate by replicate and reports per-method mean
squared error against the noise-free structure.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidSignalError, ShapeError
from .estimators import (
    estimate_noise_variance,
    fit_pca,
    fit_ppca,
    fit_rpca,
    fit_soft_threshold,
    select_sure_threshold,
    _noise_scale,
)
from .linalg import DataMatrix, center_columns, decompose

GENERATORS = ("replication", "gaussian_factors")
METHODS = ("pca", "rpca", "sure", "ppca")
SIGMA_POLICIES = ("true", "estimated")

THREADS_ENV_VAR = "REGPCA_THREADS"


@dataclass(frozen=True)
class SignalModel:
    """Noise-free low-rank structure with its exact spectral description."""

    signal: np.ndarray  # n x p
    true_eigenvalues: np.ndarray  # length S, eigenvalues of signal' signal
    left_factors: np.ndarray  # n x S orthonormal
    right_factors: np.ndarray  # p x S orthonormal
    noise_sigma2: float = 0.0


@dataclass(frozen=True)
class SimulationConfig:
    """Inputs of one Monte Carlo benchmark cell."""

    n: int
    p: int
    rank: int
    snr: float
    eigenvalue_ratio: float = 1.0
    replicates: int = 100
    seed: int = 0
    generator: str = "replication"

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("need at least 2 individuals")
        if not 1 <= self.rank <= min(self.n - 1, self.p):
            raise ConfigurationError(
                f"rank must lie in [1, {min(self.n - 1, self.p)}], got {self.rank}"
            )
        if self.snr <= 0:
            raise ConfigurationError("snr must be positive")
        if self.eigenvalue_ratio < 1:
            raise ConfigurationError("eigenvalue_ratio must be >= 1")
        if self.replicates < 1:
            raise ConfigurationError("need at least one replicate")
        if self.generator not in GENERATORS:
            raise ConfigurationError(f"generator must be one of {GENERATORS}")


@dataclass(frozen=True)
class MethodStats:
    mean: float
    sd: float  # standard deviation of the per-replicate values
    sem: float  # standard deviation of the mean
    count: int


@dataclass(frozen=True)
class ReplicateFailure:
    replicate: int
    method: str
    message: str


@dataclass(frozen=True)
class MseReport:
    """Per-method Monte Carlo summary for one configuration."""

    config: SimulationConfig
    fit_rank: int
    sigma_policy: str
    methods: tuple[str, ...]
    stats: dict[str, MethodStats]
    signal_power_mean: float
    failures: tuple[ReplicateFailure, ...] = ()
    raw: dict[str, tuple[float, ...]] | None = None

    @property
    def flagged(self) -> bool:
        return bool(self.failures)


def feasible_integer_ratios(p: int, rank: int, limit: int = 12) -> list[int]:
    """Integer eigenvalue ratios admitting an exact replication split."""
    out = []
    for ratio in range(1, p):
        try:
            replication_counts(p, rank, float(ratio))
        except ConfigurationError:
            continue
        out.append(ratio)
        if len(out) >= limit:
            break
    return out


def _is_integral(x: float) -> bool:
    return abs(x - round(x)) < 1e-9


def replication_counts(p: int, rank: int, ratio: float) -> np.ndarray:
    """Copy counts per dimension realising a first-to-second eigenvalue ratio.

    The first dimension receives ``ratio`` times the columns of the second
    and the remaining columns are spread as evenly as possible over the
    trailing dimensions without exceeding the second dimension's count, so
    the realised ratio of the two leading eigenvalues is exact. Raises
    :class:`ConfigurationError` when no integer split exists.
    """
    if rank == 1:
        return np.array([p])
    if p < rank:
        raise ConfigurationError(f"cannot spread {rank} dimensions over {p} variables")

    ideal_second = p / (ratio + rank - 1)
    if _is_integral(ideal_second) and _is_integral(ratio * ideal_second):
        c2 = round(ideal_second)
        counts = [round(ratio * c2)] + [c2] * (rank - 1)
        return np.array(counts)

    if rank == 2:
        feasible = [r for r in range(1, p) if _is_integral(p * r / (r + 1))]
        raise ConfigurationError(
            f"eigenvalue ratio {ratio} admits no integer split of {p} variables over "
            f"2 dimensions; feasible integer ratios: {feasible}"
        )

    # keep the leading ratio exact, stuff the remainder into dimensions 3..rank
    best = None
    for c2 in range(1, p):
        c1f = ratio * c2
        if not _is_integral(c1f):
            continue
        c1 = round(c1f)
        rest = p - c1 - c2
        tail_dims = rank - 2
        if rest < tail_dims or rest > tail_dims * c2:
            continue
        base, extra = divmod(rest, tail_dims)
        tail = [base + 1] * extra + [base] * (tail_dims - extra)
        if tail[0] > c2:
            continue
        spread = c2 - tail[-1]
        if best is None or spread < best[0] or (spread == best[0] and c2 > best[1]):
            best = (spread, c2, [c1, c2] + tail)
    if best is None:
        feasible = [
            r
            for r in range(1, p)
            if r != ratio and _replication_feasible(p, rank, float(r))
        ][:12]
        raise ConfigurationError(
            f"eigenvalue ratio {ratio} admits no integer split of {p} variables over "
            f"{rank} dimensions; feasible integer ratios: {feasible}"
        )
    return np.array(best[2])


def _replication_feasible(p: int, rank: int, ratio: float) -> bool:
    try:
        replication_counts(p, rank, ratio)
    except ConfigurationError:
        return False
    return True


def generate_signal(config: SimulationConfig, rng: np.random.Generator) -> SignalModel:
    """Draw one noise-free structure according to the configured generator."""
    n, p, rank = config.n, config.p, config.rank
    if config.generator == "replication":
        counts = replication_counts(p, rank, config.eigenvalue_ratio)
        basis = np.linalg.svd(rng.standard_normal((n, rank)), full_matrices=False)[0]
        signal = np.repeat(basis, counts, axis=1)
        right = np.zeros((p, rank))
        start = 0
        for s, c in enumerate(counts):
            right[start : start + c, s] = 1.0 / np.sqrt(c)
            start += c
        return SignalModel(
            signal=signal,
            true_eigenvalues=counts.astype(float),
            left_factors=basis,
            right_factors=right,
        )

    # gaussian_factors: every dimension of the same expected strength
    a = rng.standard_normal((n, rank))
    b = rng.standard_normal((p, rank))
    signal = a @ b.T / np.sqrt(rank)
    u, sv, vt = np.linalg.svd(signal, full_matrices=False)
    return SignalModel(
        signal=signal,
        true_eigenvalues=sv[:rank] ** 2,
        left_factors=u[:, :rank],
        right_factors=vt[:rank].T,
    )


def noise_sigma_for_snr(signal: SignalModel, snr: float) -> float:
    """Noise standard deviation making RMS(signal entries) / sigma equal snr."""
    if snr <= 0:
        raise ConfigurationError("snr must be positive")
    mean_square = float(np.mean(signal.signal**2))
    if mean_square == 0.0:
        raise InvalidSignalError("signal is identically zero")
    return np.sqrt(mean_square) / snr


def add_noise(signal: SignalModel, sigma: float, rng: np.random.Generator) -> DataMatrix:
    """Observation matrix: signal plus iid Gaussian noise of sd ``sigma``."""
    if sigma < 0:
        raise ConfigurationError("sigma must be non-negative")
    noise = rng.standard_normal(signal.signal.shape)
    return DataMatrix(signal.signal + sigma * noise)


def mse(fitted: np.ndarray, truth: np.ndarray) -> float:
    """Per-entry mean squared difference between two matrices."""
    a = np.asarray(fitted, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Independent stream for one replicate; identical in serial or parallel runs."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate,)))


def default_thread_count() -> int:
    value = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _fit_one(method, centered, svd, fit_rank, sigma_true2, sigma_policy):
    n, p = centered.n_rows, centered.n_cols
    if method == "pca":
        return fit_pca(centered, fit_rank, factors=svd)
    if method == "rpca":
        return fit_rpca(centered, fit_rank, factors=svd)
    if method in ("sure", "ppca"):
        if sigma_policy == "true":
            sigma2 = sigma_true2
        else:
            sigma2 = estimate_noise_variance(svd, fit_rank, n, p)
        if method == "sure":
            thr = select_sure_threshold(centered, sigma2, factors=svd)
            return fit_soft_threshold(centered, thr, sigma2=sigma2, factors=svd)
        return fit_ppca(centered, fit_rank, _noise_scale(n, p) * sigma2, factors=svd)[1]
    raise ConfigurationError(f"unknown method {method!r}; choose from {METHODS}")


def run_benchmark(
    config: SimulationConfig,
    methods=("pca", "rpca", "sure"),
    fit_rank: int | None = None,
    sigma_policy: str = "true",
    threads: int | None = None,
    store_raw: bool = False,
) -> MseReport:
    """Monte Carlo MSE comparison of the estimators under one configuration.

    Each replicate draws a fresh signal and noise, centers the observation,
    fits every method on the centered matrix and scores the uncentered fit
    against the noise-free signal. PCA/rPCA use ``fit_rank`` dimensions
    (default: the true rank); the soft-threshold and latent-variable methods
    receive the noise variance according to ``sigma_policy`` ("true" uses the
    generating value, "estimated" the residual-variance estimate). Estimator
    errors abort the replicate and are recorded in the report.
    """
    methods = tuple(methods)
    if not methods:
        raise ConfigurationError("need at least one method")
    for m in methods:
        if m not in METHODS:
            raise ConfigurationError(f"unknown method {m!r}; choose from {METHODS}")
    if sigma_policy not in SIGMA_POLICIES:
        raise ConfigurationError(f"sigma_policy must be one of {SIGMA_POLICIES}")
    if fit_rank is None:
        fit_rank = config.rank
    if fit_rank < 0:
        raise ConfigurationError("fit_rank must be non-negative")
    if threads is None:
        threads = default_thread_count()

    def one_replicate(rep: int):
        rng = replicate_rng(config.seed, rep)
        model = generate_signal(config, rng)
        sigma = noise_sigma_for_snr(model, config.snr)
        observed = add_noise(model, sigma, rng)
        centered = center_columns(observed)
        svd = decompose(centered)
        power = float(np.mean(model.signal**2))
        values = {}
        for method in methods:
            try:
                result = _fit_one(method, centered, svd, fit_rank, sigma**2, sigma_policy)
            except (ValueError, ArithmeticError) as exc:
                return rep, None, power, ReplicateFailure(rep, method, str(exc))
            restored = result.fitted + centered.column_means
            values[method] = mse(restored, model.signal)
        return rep, values, power, None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one_replicate, range(config.replicates)))
    else:
        outcomes = [one_replicate(rep) for rep in range(config.replicates)]

    per_method: dict[str, list[float]] = {m: [] for m in methods}
    failures: list[ReplicateFailure] = []
    powers: list[float] = []
    for _, values, power, failure in outcomes:
        powers.append(power)
        if failure is not None:
            failures.append(failure)
            continue
        for m in methods:
            per_method[m].append(values[m])

    stats = {}
    for m in methods:
        vals = np.asarray(per_method[m])
        if vals.size == 0:
            stats[m] = MethodStats(mean=float("nan"), sd=0.0, sem=0.0, count=0)
            continue
        sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        stats[m] = MethodStats(
            mean=float(vals.mean()),
            sd=sd,
            sem=sd / np.sqrt(vals.size) if vals.size else 0.0,
            count=int(vals.size),
        )
    return MseReport(
        config=config,
        fit_rank=fit_rank,
        sigma_policy=sigma_policy,
        methods=methods,
        stats=stats,
        signal_power_mean=float(np.mean(powers)),
        failures=tuple(failures),
        raw={m: tuple(v) for m, v in per_method.items()} if store_raw else None,
    )
