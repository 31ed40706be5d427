"""Correlation analysis for metric trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, MetricError


@dataclass(frozen=True)
class CorrelationReport:
    """Product-moment and rank correlation over n paired observations."""

    pearson_r: float
    spearman_rho: float
    n: int


def _paired_series(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise DataError("correlation inputs must be 1-D series")
    if x.size != y.size:
        raise DataError(f"series lengths differ: {x.size} vs {y.size}")
    if x.size < 3:
        raise DataError("need >= 3 observations")
    return x, y


def pearson(x, y) -> float:
    """Product-moment correlation; errors out for constant series."""
    x, y = _paired_series(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.linalg.norm(xc))
    sy = float(np.linalg.norm(yc))
    if sx == 0.0 or sy == 0.0:
        raise MetricError("undefined correlation: series is constant")
    r = float(xc @ yc) / (sx * sy)
    return max(-1.0, min(1.0, r))


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Rank correlation: the product-moment correlation of average ranks."""
    x, y = _paired_series(x, y)
    return pearson(average_ranks(x), average_ranks(y))


def correlate_series(x, y) -> CorrelationReport:
    x, y = _paired_series(x, y)
    return CorrelationReport(pearson_r=pearson(x, y), spearman_rho=spearman(x, y), n=int(x.size))


def correlate_trajectory(trajectory) -> tuple[CorrelationReport, int]:
    """Correlate the silhouette and isotropy columns of a trajectory.

    Rows where either metric is a NaN sentinel are dropped pairwise first;
    returns the report plus the number of dropped rows.
    """
    sil = trajectory.column("silhouette")
    iso = trajectory.column("isoscore")
    keep = ~(np.isnan(sil) | np.isnan(iso))
    dropped = int((~keep).sum())
    sil, iso = sil[keep], iso[keep]
    if sil.size < 3:
        raise DataError("need >= 3 observations")
    return correlate_series(sil, iso), dropped


def is_sentinel(value: float) -> bool:
    return isinstance(value, float) and math.isnan(value)
