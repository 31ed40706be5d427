"""Dense geometry kernels: pairwise distances, covariance, PCA reorientation.

All arithmetic is 64-bit floating point. Every function here is pure and
reentrant; none mutates its input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, MetricError, NumericalError


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise DataError(f"points must form a 2-D array, got shape {pts.shape}")
    n, d = pts.shape
    if n < 1 or d < 1:
        raise DataError(f"need at least one point and one dimension, got {n}x{d}")
    if not np.isfinite(pts).all():
        raise DataError("points contain non-finite entries")
    return pts


@dataclass(frozen=True)
class PointCloud:
    """An ordered multiset of n real vectors sharing one dimension d."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class VarianceVector:
    """Per-dimension variances, optionally rescaled to the norm of the all-ones vector."""

    variances: np.ndarray
    is_normalized: bool = False

    def __post_init__(self):
        var = np.asarray(self.variances, dtype=np.float64)
        if var.ndim != 1 or var.size < 1:
            raise DataError("variances must form a non-empty 1-D array")
        if not np.isfinite(var).all() or (var < 0).any():
            raise DataError("variances must be finite and nonnegative")
        object.__setattr__(self, "variances", var)
        if self.is_normalized:
            target = math.sqrt(var.size)
            if abs(float(np.linalg.norm(var)) - target) > 1e-9 * target:
                raise DataError("normalized variance vector must have norm sqrt(d)")

    @property
    def d(self) -> int:
        return self.variances.size

    def normalized(self) -> "VarianceVector":
        """Rescale so the Euclidean norm equals sqrt(d)."""
        norm = float(np.linalg.norm(self.variances))
        if norm == 0.0:
            raise MetricError("variance vector is zero; isotropy undefined")
        scale = math.sqrt(self.d) / norm
        return VarianceVector(self.variances * scale, is_normalized=True)


def _pairwise_sq_dists(pts: np.ndarray) -> np.ndarray:
    gram = pts @ pts.T
    sq_norms = np.diagonal(gram).copy()
    # reuse the Gram buffer: |x|^2 + |y|^2 - 2<x,y>, clamped and symmetrized
    gram *= -2.0
    gram += sq_norms[:, None]
    gram += sq_norms[None, :]
    np.maximum(gram, 0.0, out=gram)
    gram += gram.T
    gram *= 0.5
    np.fill_diagonal(gram, 0.0)
    return gram


def pairwise_sq_dists(cloud: PointCloud) -> np.ndarray:
    """n x n matrix of squared Euclidean distances.

    Exactly symmetric with an exactly-zero diagonal.
    """
    return _pairwise_sq_dists(cloud.points)


def _covariance(pts: np.ndarray) -> np.ndarray:
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / pts.shape[0]
    return 0.5 * (cov + cov.T)


def covariance(cloud: PointCloud) -> np.ndarray:
    """Population (divide-by-n) covariance matrix of the mean-centered cloud."""
    return _covariance(cloud.points)


def _pca_reorient(pts: np.ndarray) -> np.ndarray:
    centered = pts - pts.mean(axis=0)
    try:
        eigvals, eigvecs = np.linalg.eigh(_covariance(pts))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"covariance eigendecomposition failed: {exc}") from exc
    # descending eigenvalues; stable sort keeps tied eigenvalues in solver order
    order = np.argsort(-eigvals, kind="stable")
    return centered @ eigvecs[:, order]


def pca_reorient(cloud: PointCloud) -> PointCloud:
    """Mean-center the cloud and rotate it onto the eigenbasis of its covariance.

    Output components are ordered by descending variance; the output
    covariance is diagonal. The rotation is an isometry of the centered
    cloud, so pairwise distances are preserved. Zero-variance dimensions are
    kept.
    """
    return PointCloud(_pca_reorient(cloud.points))


def _variance_from_pairs(pts: np.ndarray) -> np.ndarray:
    n = pts.shape[0]
    total = pts.sum(axis=0)
    total_sq = (pts * pts).sum(axis=0)
    # sum over ordered pairs of (x_j - x_k)^2 == 2n*sum(x^2) - 2*(sum x)^2
    pair_sums = 2.0 * n * total_sq - 2.0 * total * total
    return np.maximum(pair_sums / (2.0 * n * n), 0.0)


def variance_from_pairs(cloud: PointCloud) -> VarianceVector:
    """Per-dimension variance computed from pairwise squared coordinate gaps.

    Averaging (x_j - x_k)^2 over all ordered pairs and halving yields the
    population variance of each coordinate; the expanded form keeps the
    evaluation O(n*d).
    """
    return VarianceVector(_variance_from_pairs(cloud.points), is_normalized=False)
