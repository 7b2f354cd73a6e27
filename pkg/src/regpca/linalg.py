"""Centering, spectral decomposition and weighted low-rank reconstruction.

Every estimator in this package works on a column-centered matrix and its
singular value decomposition. Eigenvalues stored here are those of X'X,
i.e. squared singular values of the centered matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError, InvalidWeightError, RankError

# Eigenvalues below this fraction of the largest are snapped to exact zero so
# shrinkage denominators never see noise-floor values.
EIGENVALUE_CLIP = 1e-12

ORTHONORMALITY_TOL = 1e-8


@dataclass(frozen=True)
class DataMatrix:
    """Dense n x p observation matrix (rows = individuals) with centering state."""

    values: np.ndarray
    centered: bool = False
    column_means: np.ndarray | None = None
    row_labels: tuple[str, ...] | None = None
    column_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise InvalidInputError("data matrix must be two-dimensional")
        n, p = values.shape
        if n < 2 or p < 1:
            raise InvalidInputError(f"need at least 2 rows and 1 column, got {n}x{p}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("data matrix contains non-finite entries")
        object.__setattr__(self, "values", values)
        if self.column_means is None:
            object.__setattr__(self, "column_means", np.zeros(p))
        else:
            means = np.array(self.column_means, dtype=float)
            if means.shape != (p,):
                raise InvalidInputError(
                    f"column_means must have length {p}, got shape {means.shape}"
                )
            object.__setattr__(self, "column_means", means)
        if self.centered:
            tol = 1e-10 * (values.std(axis=0) + 1.0)
            if np.any(np.abs(values.mean(axis=0)) > tol):
                raise InvalidInputError("matrix is flagged centered but column means are not zero")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def max_rank(self) -> int:
        # centering removes one dimension, hence n - 1 rather than n
        return min(self.n_rows - 1, self.n_cols)


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD of a centered matrix.

    ``eigenvalues[s]`` is the s-th eigenvalue of X'X (the squared singular
    value); columns of ``left_vectors`` / ``right_vectors`` are the matching
    singular vectors. At most ``max_rank = min(n - 1, p)`` pairs are kept.
    """

    left_vectors: np.ndarray
    right_vectors: np.ndarray
    eigenvalues: np.ndarray
    max_rank: int

    def __post_init__(self):
        left = np.asarray(self.left_vectors, dtype=float)
        right = np.asarray(self.right_vectors, dtype=float)
        lam = np.array(self.eigenvalues, dtype=float)
        if left.ndim != 2 or right.ndim != 2 or lam.ndim != 1:
            raise InvalidInputError("left/right vectors must be matrices, eigenvalues a vector")
        r = lam.size
        if left.shape[1] != r or right.shape[1] != r:
            raise InvalidInputError("vector blocks and eigenvalues disagree on the rank")
        if r > self.max_rank:
            raise RankError(f"{r} components exceed max_rank={self.max_rank}")
        if np.any(lam < -1e-12):
            raise InvalidInputError("eigenvalues must be non-negative (beyond roundoff)")
        lam = np.maximum(lam, 0.0)
        if np.any(np.diff(lam) > 1e-9 * (lam[0] if r else 1.0)):
            raise InvalidInputError("eigenvalues must be sorted non-increasing")
        for block in (left, right):
            gram = block.T @ block
            if r and np.max(np.abs(gram - np.eye(r))) > ORTHONORMALITY_TOL:
                raise InvalidInputError("singular vectors are not orthonormal")
        object.__setattr__(self, "left_vectors", left)
        object.__setattr__(self, "right_vectors", right)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def rank(self) -> int:
        """Number of stored components (including exact zeros)."""
        return self.eigenvalues.size

    @property
    def effective_rank(self) -> int:
        """Number of strictly positive eigenvalues after clipping."""
        return int(np.count_nonzero(self.eigenvalues))

    @property
    def singular_values(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)


def center_columns(matrix: DataMatrix) -> DataMatrix:
    """Subtract each column mean, recording it so the input can be rebuilt."""
    means = matrix.values.mean(axis=0)
    return DataMatrix(
        matrix.values - means,
        centered=True,
        column_means=means,
        row_labels=matrix.row_labels,
        column_labels=matrix.column_labels,
    )


def decompose(matrix: DataMatrix) -> SvdFactors:
    """Thin SVD of a centered matrix with a reproducible sign convention.

    Signs are flipped so the largest-magnitude entry of each right singular
    vector is positive; eigenvalues below ``EIGENVALUE_CLIP`` times the
    largest become exact zeros (vectors are kept).
    """
    if not matrix.centered:
        raise InvalidInputError("decompose requires a centered matrix; call center_columns first")
    u, sv, vt = np.linalg.svd(matrix.values, full_matrices=False)
    r = matrix.max_rank
    u, sv, v = u[:, :r], sv[:r], vt[:r].T

    # sign convention: largest-|entry| of each right vector made positive
    if r:
        anchor = np.abs(v).argmax(axis=0)
        signs = np.sign(v[anchor, np.arange(r)])
        signs[signs == 0] = 1.0
        u = u * signs
        v = v * signs

    lam = sv**2
    if r and lam[0] > 0:
        lam[lam < EIGENVALUE_CLIP * lam[0]] = 0.0
    return SvdFactors(u, v, lam, max_rank=r)


def reconstruct_weighted(factors: SvdFactors, weights) -> np.ndarray:
    """Sum of the first ``len(weights)`` singular terms, each damped by its weight.

    Returns sum_s weights[s] * sqrt(eigenvalues[s]) * u_s v_s'. Weights must
    lie in [0, 1]; an empty weight vector yields the zero matrix.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise InvalidWeightError("weights must be a one-dimensional vector")
    s = w.size
    if s > factors.rank:
        raise RankError(f"requested {s} dimensions but decomposition holds {factors.rank}")
    if s and (not np.all(np.isfinite(w)) or w.min() < 0.0 or w.max() > 1.0):
        raise InvalidWeightError("weights must be finite and within [0, 1]")
    scale = w * np.sqrt(factors.eigenvalues[:s])
    return (factors.left_vectors[:, :s] * scale) @ factors.right_vectors[:, :s].T


def uncenter(fitted: np.ndarray, matrix: DataMatrix) -> np.ndarray:
    """Map a fitted matrix back to the data space by restoring column means."""
    return fitted + matrix.column_means


def with_values(matrix: DataMatrix, values: np.ndarray, centered: bool = False) -> DataMatrix:
    """Copy of ``matrix`` holding different values but the same labels."""
    return replace(matrix, values=values, centered=centered, column_means=None)
