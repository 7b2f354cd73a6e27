"""Fitted-matrix estimators built on per-dimension singular value damping.

All four estimators share one recipe: decompose the centered matrix, damp
each retained singular value by a factor in [0, 1], and rebuild. They differ
in how the factors are chosen:

* ``fit_pca``            -- hard truncation, factors all 1;
* ``fit_rpca``           -- per-dimension signal-over-total variance ratio,
                            which shrinks trailing dimensions hardest;
* ``fit_soft_threshold`` -- subtract a constant from every singular value,
                            flooring at zero;
* ``fit_ppca``           -- latent-variable model with isotropic noise whose
                            conditional-expectation fit coincides with
                            ``fit_rpca``.

``select_sure_threshold`` picks the soft-threshold constant by minimising
Stein's unbiased risk estimate, and ``bayes_shrinkage_factors`` recovers the
same factors as ``rpca_shrinkage_factors`` from an empirical-Bayes posterior
mean, exposing the per-dimension prior variances along the way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegreesOfFreedomError,
    InvalidGridError,
    InvalidInputError,
    InvalidThresholdError,
    NonPositiveLoadingError,
    RankError,
    ZeroEigenvalueError,
)
from .linalg import DataMatrix, SvdFactors, decompose, reconstruct_weighted


@dataclass(frozen=True)
class ShrinkageResult:
    """One fitted matrix plus the per-dimension factors that produced it."""

    method: str  # pca | rpca | soft_threshold | ppca
    rank: int
    sigma2_hat: float
    factors: np.ndarray
    fitted: np.ndarray
    eigenvalues: np.ndarray
    svd: SvdFactors
    prior_variances: np.ndarray | None = None
    threshold: float | None = None
    row_labels: tuple[str, ...] | None = None
    column_labels: tuple[str, ...] | None = None

    @property
    def shrunk_singular_values(self) -> np.ndarray:
        """factors * sqrt(eigenvalues) for the retained dimensions."""
        return self.factors * np.sqrt(self.eigenvalues[: self.rank])


@dataclass(frozen=True)
class PpcaModel:
    """Maximum-likelihood loadings and conditional scores of the latent model."""

    loadings: np.ndarray  # p x S
    scores: np.ndarray  # n x S
    rotation: np.ndarray  # S x S orthogonal, identity by default
    sigma2: float


def _noise_scale(n: int, p: int) -> float:
    """Multiplier mapping a per-entry noise variance onto the eigenvalue scale."""
    return n * p / min(n - 1, p)


def estimate_noise_variance(factors: SvdFactors, rank: int, n: int, p: int) -> float:
    """Residual variance left over after a rank-``rank`` fit.

    The eigenvalue mass beyond the first ``rank`` dimensions is divided by
    the residual degrees of freedom,
    ``n*p - p - n*rank - p*rank + rank**2 + rank``
    (observations minus parameters for the column means and ``rank``
    orthonormal factor pairs).
    """
    max_rank = min(n - 1, p)
    if not 0 <= rank <= max_rank:
        raise RankError(f"rank must lie in [0, {max_rank}], got {rank}")
    denominator = n * p - p - n * rank - p * rank + rank * rank + rank
    if denominator <= 0:
        raise DegreesOfFreedomError(
            f"residual degrees of freedom must be positive, got {denominator} "
            f"(n={n}, p={p}, rank={rank})"
        )
    tail = float(np.sum(factors.eigenvalues[rank:]))
    return max(tail / denominator, 0.0)


def rpca_shrinkage_factors(eigenvalues, n: int, p: int, sigma2: float) -> np.ndarray:
    """Per-dimension ratio of estimated signal variance to total variance.

    Each factor is ``(lambda_s - c * sigma2) / lambda_s`` with
    ``c = n*p / min(n-1, p)``, clamped to [0, 1]. Negative values (dimensions
    dominated by noise) clamp to 0 rather than anti-correlating the fit.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1:
        raise InvalidInputError("eigenvalues must be a vector")
    if np.any(lam <= 0.0):
        raise ZeroEigenvalueError("shrinkage is undefined for zero eigenvalues")
    if sigma2 < 0.0:
        raise InvalidInputError("sigma2 must be non-negative")
    return np.clip(1.0 - _noise_scale(n, p) * sigma2 / lam, 0.0, 1.0)


def bayes_shrinkage_factors(eigenvalues, n: int, p: int, sigma2: float):
    """Posterior-mean damping factors and the per-dimension prior variances.

    With a centered Gaussian prior of variance tau_s^2 on each dimension of
    the signal, the posterior expectation damps dimension s by
    ``tau_s^2 / (tau_s^2 + sigma2 / min(n-1, p))`` where
    ``tau_s^2 = lambda_s / (n*p) - sigma2 / min(n-1, p)`` (clamped at 0).
    In exact arithmetic this equals :func:`rpca_shrinkage_factors`.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1:
        raise InvalidInputError("eigenvalues must be a vector")
    if np.any(lam <= 0.0):
        raise ZeroEigenvalueError("shrinkage is undefined for zero eigenvalues")
    if sigma2 < 0.0:
        raise InvalidInputError("sigma2 must be non-negative")
    unit_noise = sigma2 / min(n - 1, p)
    prior = np.maximum(lam / (n * p) - unit_noise, 0.0)
    if sigma2 == 0.0:
        return np.ones_like(lam), prior
    return prior / (prior + unit_noise), prior


def _factors_for(matrix: DataMatrix, factors: SvdFactors | None) -> SvdFactors:
    if factors is None:
        return decompose(matrix)
    return factors


def _result(matrix, method, rank, sigma2, weights, fitted, svd, **extra) -> ShrinkageResult:
    return ShrinkageResult(
        method=method,
        rank=rank,
        sigma2_hat=float(sigma2),
        factors=np.asarray(weights, dtype=float),
        fitted=fitted,
        eigenvalues=svd.eigenvalues,
        svd=svd,
        row_labels=matrix.row_labels,
        column_labels=matrix.column_labels,
        **extra,
    )


def fit_pca(matrix: DataMatrix, rank: int, factors: SvdFactors | None = None) -> ShrinkageResult:
    """Truncated rank-``rank`` least squares fit (all damping factors 1)."""
    svd = _factors_for(matrix, factors)
    if not 0 <= rank <= svd.rank:
        raise RankError(f"rank must lie in [0, {svd.rank}], got {rank}")
    weights = np.ones(rank)
    fitted = reconstruct_weighted(svd, weights)
    sigma2 = estimate_noise_variance(svd, rank, matrix.n_rows, matrix.n_cols)
    return _result(matrix, "pca", rank, sigma2, weights, fitted, svd)


def fit_rpca(
    matrix: DataMatrix,
    rank: int,
    sigma2: float | None = None,
    factors: SvdFactors | None = None,
) -> ShrinkageResult:
    """Rank-``rank`` fit with per-dimension variance-ratio damping.

    ``sigma2`` overrides the internally estimated residual variance (useful
    when the noise level is known). Rank 0 is legal and returns the zero
    matrix, i.e. the column means once uncentered.
    """
    svd = _factors_for(matrix, factors)
    if not 0 <= rank <= svd.rank:
        raise RankError(f"rank must lie in [0, {svd.rank}], got {rank}")
    if sigma2 is None:
        sigma2 = estimate_noise_variance(svd, rank, matrix.n_rows, matrix.n_cols)
    elif sigma2 < 0.0:
        raise InvalidInputError("sigma2 override must be non-negative")
    if rank == 0:
        weights = np.zeros(0)
    else:
        weights = rpca_shrinkage_factors(
            svd.eigenvalues[:rank], matrix.n_rows, matrix.n_cols, sigma2
        )
    fitted = reconstruct_weighted(svd, weights)
    return _result(matrix, "rpca", rank, sigma2, weights, fitted, svd)


def fit_soft_threshold(
    matrix: DataMatrix,
    threshold: float,
    sigma2: float | None = None,
    factors: SvdFactors | None = None,
) -> ShrinkageResult:
    """Subtract ``threshold`` from every singular value, flooring at zero.

    The result's rank counts the surviving values. ``sigma2`` is recorded
    for reporting only (0 when unknown); it does not affect the fit.
    """
    if threshold < 0.0:
        raise InvalidThresholdError(f"threshold must be non-negative, got {threshold}")
    svd = _factors_for(matrix, factors)
    sv = svd.singular_values
    rank = int(np.count_nonzero(sv > threshold))
    weights = (sv[:rank] - threshold) / sv[:rank]
    fitted = reconstruct_weighted(svd, weights)
    return _result(
        matrix,
        "soft_threshold",
        rank,
        0.0 if sigma2 is None else sigma2,
        weights,
        fitted,
        svd,
        threshold=float(threshold),
    )


def sure_risk(singular_values, threshold: float, n: int, p: int, sigma2: float) -> float:
    """Unbiased estimate of the squared-error risk of soft thresholding.

    Classic closed form for spectral soft thresholding under iid Gaussian
    noise of variance ``sigma2``:

        -n*p*sigma2 + sum_i min(threshold^2, sv_i^2) + 2*sigma2*div

    where ``div`` counts surviving dimensions plus ``|n-p|`` partial terms
    plus cross terms over distinct singular-value pairs. Exact ties are
    handled by their analytic limit.
    """
    risks = sure_risk_curve(singular_values, [threshold], n, p, sigma2)
    return float(risks[0])


def sure_risk_curve(singular_values, thresholds, n: int, p: int, sigma2: float) -> np.ndarray:
    """Vector of :func:`sure_risk` values over candidate thresholds."""
    m = min(n, p)
    sv = np.zeros(m)
    given = np.sort(np.asarray(singular_values, dtype=float))[::-1]
    if given.size > m:
        raise InvalidInputError(f"got {given.size} singular values for a {n}x{p} matrix")
    sv[: given.size] = given
    t = sv**2

    # pairwise part of the divergence does not depend on the threshold
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, np.inf)
    ties = diff == 0.0
    diff[ties] = np.inf
    inv_col_sums = (1.0 / diff).sum(axis=1)
    tie_counts = ties.sum(axis=1)

    lam = np.asarray(thresholds, dtype=float)
    risks = np.empty(lam.size)
    for k, thr in enumerate(lam):
        pos = np.maximum(sv - thr, 0.0)
        kept = sv > thr
        div = float(kept.sum())
        nz = sv > 0.0
        div += abs(n - p) * float((pos[nz] / sv[nz]).sum())
        cross = float((sv * pos) @ inv_col_sums)
        if tie_counts.any():
            # limit of the paired terms as two squared values coincide
            limit = np.where(kept & nz, 1.0 - thr / (2.0 * np.where(nz, sv, 1.0)), 0.0)
            cross += 0.5 * float((tie_counts * limit).sum())
        div += 2.0 * cross
        risks[k] = -n * p * sigma2 + float(np.minimum(thr**2, t).sum()) + 2.0 * sigma2 * div
    return risks


def default_threshold_grid(singular_values) -> np.ndarray:
    """Observed singular values plus midpoints between consecutive ones."""
    sv = np.unique(np.asarray(singular_values, dtype=float))
    mids = 0.5 * (sv[1:] + sv[:-1])
    return np.unique(np.concatenate([sv, mids]))


def select_sure_threshold(
    matrix: DataMatrix,
    sigma2: float,
    grid=None,
    factors: SvdFactors | None = None,
) -> float:
    """Grid value minimising the unbiased risk estimate for soft thresholding."""
    if sigma2 <= 0.0:
        raise InvalidInputError("sigma2 must be positive to evaluate the risk estimate")
    svd = _factors_for(matrix, factors)
    if grid is None:
        grid = default_threshold_grid(svd.singular_values)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidGridError("threshold grid is empty")
    risks = sure_risk_curve(svd.singular_values, grid, matrix.n_rows, matrix.n_cols, sigma2)
    return float(grid[int(np.argmin(risks))])


def fit_ppca(
    matrix: DataMatrix,
    rank: int,
    sigma2: float,
    factors: SvdFactors | None = None,
) -> tuple[PpcaModel, ShrinkageResult]:
    """Latent-variable fit with isotropic noise of variance ``sigma2``.

    ``sigma2`` is interpreted on the eigenvalue scale, i.e. it is subtracted
    from the eigenvalues of X'X directly; every retained eigenvalue must
    exceed it. Loadings are ``V (Lambda - sigma2 I)^{1/2}`` and scores are
    the conditional expectation of the latent variables,
    ``X B (B'B + sigma2 I)^{-1}``. The fitted matrix ``scores @ loadings'``
    carries the same damped singular values as :func:`fit_rpca`, so the two
    fits coincide when given matching noise variances (for a per-entry
    residual variance ``s2``, pass ``sigma2 = s2 * n * p / min(n - 1, p)``).
    """
    svd = _factors_for(matrix, factors)
    if not 1 <= rank <= svd.rank:
        raise RankError(f"rank must lie in [1, {svd.rank}], got {rank}")
    if sigma2 < 0.0:
        raise InvalidInputError("sigma2 must be non-negative")
    lam = svd.eigenvalues[:rank]
    if np.any(lam <= sigma2):
        raise NonPositiveLoadingError(
            f"sigma2={sigma2} must be strictly below the smallest retained eigenvalue "
            f"{lam[-1]}"
        )
    loadings = svd.right_vectors[:, :rank] * np.sqrt(lam - sigma2)
    gram = loadings.T @ loadings + sigma2 * np.eye(rank)
    scores = np.linalg.solve(gram.T, (matrix.values @ loadings).T).T
    weights = (lam - sigma2) / lam
    fitted = reconstruct_weighted(svd, weights)
    model = PpcaModel(loadings=loadings, scores=scores, rotation=np.eye(rank), sigma2=float(sigma2))
    result = _result(matrix, "ppca", rank, sigma2, weights, fitted, svd)
    return model, result
