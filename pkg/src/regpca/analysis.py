"""Coordinate extraction and configuration comparison for graphical output.

Individual coordinates are the left singular vectors scaled by the damped
singular values, variable coordinates the right singular vectors scaled the
same way; damping therefore pulls points toward the origin. Configurations
from different fits are made comparable by least-squares Procrustes
superimposition (translation, rotation/reflection and isotropic scale), and
``dispersion_summary`` condenses a set of aligned configurations into
per-point mean, variance and bias against a reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateReferenceError,
    EmptyConfigurationError,
    InvalidInputError,
    ShapeError,
)
from .estimators import ShrinkageResult


@dataclass(frozen=True)
class Configuration:
    """m points in k retained dimensions, labelled."""

    points: np.ndarray
    kind: str  # "individuals" | "variables"
    labels: tuple[str, ...]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidInputError("configuration points must be an m x k matrix, k >= 1")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("configuration contains non-finite entries")
        if len(self.labels) != pts.shape[0]:
            raise InvalidInputError("one label per point required")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", tuple(self.labels))


@dataclass(frozen=True)
class ProcrustesAlignment:
    """Similarity transform mapping a configuration onto a reference."""

    rotation: np.ndarray  # k x k orthogonal, may include a reflection
    translation: np.ndarray
    scale: float
    residual: float  # Frobenius distance to the reference after alignment


def _default_labels(prefix: str, count: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(count))


def individual_coordinates(result: ShrinkageResult) -> Configuration:
    """Row points: left singular vectors scaled by the damped singular values."""
    if result.rank == 0:
        raise EmptyConfigurationError("rank-0 fit has no coordinates")
    points = result.svd.left_vectors[:, : result.rank] * result.shrunk_singular_values
    labels = result.row_labels or _default_labels("ind_", points.shape[0])
    return Configuration(points, "individuals", labels)


def variable_coordinates(result: ShrinkageResult) -> Configuration:
    """Column points: right singular vectors scaled by the damped singular values."""
    if result.rank == 0:
        raise EmptyConfigurationError("rank-0 fit has no coordinates")
    points = result.svd.right_vectors[:, : result.rank] * result.shrunk_singular_values
    labels = result.column_labels or _default_labels("var_", points.shape[0])
    return Configuration(points, "variables", labels)


def variable_cosines(result: ShrinkageResult) -> np.ndarray:
    """Cosines between fitted variable vectors (covariance-like link strength).

    Variables whose fitted vector is zero produce NaN rows and columns.
    """
    coords = variable_coordinates(result).points
    norms = np.linalg.norm(coords, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = coords / norms[:, None]
        return unit @ unit.T


def procrustes_align(
    config: Configuration, reference: Configuration
) -> tuple[Configuration, ProcrustesAlignment]:
    """Least-squares similarity superimposition of ``config`` onto ``reference``.

    Finds translation, orthogonal rotation (reflections allowed) and
    isotropic scale minimising the Frobenius distance to the reference, and
    returns the transformed configuration together with the transform.
    """
    a = config.points
    b = reference.points
    if a.shape != b.shape:
        raise ShapeError(f"configurations differ in shape: {a.shape} vs {b.shape}")
    mu_a = a.mean(axis=0)
    mu_b = b.mean(axis=0)
    ac = a - mu_a
    bc = b - mu_b
    norm_b = np.linalg.norm(bc)
    if norm_b == 0.0:
        raise DegenerateReferenceError("reference configuration has no spread")
    norm_a2 = float(np.sum(ac**2))
    k = a.shape[1]
    if norm_a2 == 0.0:
        # degenerate input: nothing to rotate or scale, translate only
        rotation = np.eye(k)
        scale = 1.0
    else:
        u, sv, vt = np.linalg.svd(ac.T @ bc)
        rotation = u @ vt
        scale = float(sv.sum()) / norm_a2
    aligned_points = scale * ac @ rotation + mu_b
    translation = mu_b - scale * mu_a @ rotation
    residual = float(np.linalg.norm(aligned_points - b))
    aligned = Configuration(aligned_points, config.kind, config.labels)
    return aligned, ProcrustesAlignment(rotation, translation, scale, residual)


@dataclass(frozen=True)
class DispersionSummary:
    """Per-point first and second moments of a set of configurations."""

    labels: tuple[str, ...]
    mean: np.ndarray  # m x k, average position per point
    variance: np.ndarray  # m x k, per-axis variance per point
    bias: np.ndarray  # m x k, mean minus reference

    @property
    def mean_point_variance(self) -> float:
        """Average over points of the per-point total variance."""
        return float(self.variance.sum(axis=1).mean())

    @property
    def mean_point_bias(self) -> float:
        """Average over points of the per-point bias norm."""
        return float(np.linalg.norm(self.bias, axis=1).mean())


def dispersion_summary(aligned_set, reference: Configuration) -> DispersionSummary:
    """Mean position, per-axis variance and bias of aligned configurations."""
    configs = list(aligned_set)
    if not configs:
        raise ShapeError("need at least one configuration")
    shape = reference.points.shape
    for c in configs:
        if c.points.shape != shape:
            raise ShapeError(f"configuration shape {c.points.shape} does not match {shape}")
    stack = np.stack([c.points for c in configs])
    mean = stack.mean(axis=0)
    variance = stack.var(axis=0)
    return DispersionSummary(
        labels=reference.labels,
        mean=mean,
        variance=variance,
        bias=mean - reference.points,
    )
