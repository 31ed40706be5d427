"""Cluster-structure and isotropy metrics over labeled point clouds.

Silhouette machinery treats multi-label points as composite labels: two
points share a cluster only when their symbol sets are equal. Isotropy
scoring always reorients the cloud onto its covariance eigenbasis first
(idempotent for already-reoriented input), normalizes the per-dimension
variance vector to the norm of the all-ones vector, and maps the distance
between the two into a [0, 1] score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, MetricError
from .geometry import (
    PointCloud,
    _pairwise_sq_dists,
    _pca_reorient,
    _variance_from_pairs,
)


def _canon(label):
    if isinstance(label, (set, frozenset)):
        return frozenset(label)
    return label


def _key_sort_token(key):
    # strings sort among strings; composite sets sort by their sorted symbols
    if isinstance(key, frozenset):
        return (1, tuple(sorted(key)))
    return (0, (key,))


@dataclass(frozen=True)
class LabelAssignment:
    """Per-point labels drawn from a symbol universe.

    Single-label assignments hold one symbol (str) per point. Multi-label
    assignments hold a frozenset of symbols per point and compare whole sets
    for cluster identity.
    """

    labels: tuple
    universe: tuple
    is_multilabel: bool

    @classmethod
    def single(cls, labels, universe=None) -> "LabelAssignment":
        entries = tuple(str(lab) for lab in labels)
        if not entries:
            raise DataError("label assignment needs at least one point")
        used = set(entries)
        if universe is None:
            universe = sorted(used)
        elif not used.issubset(universe):
            raise DataError(f"labels outside the declared universe: {sorted(used - set(universe))}")
        return cls(entries, tuple(universe), False)

    @classmethod
    def multi(cls, label_sets, universe=None) -> "LabelAssignment":
        entries = tuple(frozenset(str(s) for s in labs) for labs in label_sets)
        if not entries:
            raise DataError("label assignment needs at least one point")
        if any(not labs for labs in entries):
            raise DataError("every point needs at least one symbol")
        used = set().union(*entries)
        if universe is None:
            universe = sorted(used)
        elif not used.issubset(universe):
            raise DataError(f"labels outside the declared universe: {sorted(used - set(universe))}")
        return cls(entries, tuple(universe), True)

    @property
    def n(self) -> int:
        return len(self.labels)

    def composite_codes(self):
        """Integer cluster codes plus the distinct composite keys, in canonical order."""
        keys = sorted(set(self.labels), key=_key_sort_token)
        index = {key: i for i, key in enumerate(keys)}
        codes = np.fromiter((index[lab] for lab in self.labels), dtype=np.intp, count=self.n)
        return codes, tuple(keys)

    def composite_counts(self) -> dict:
        counts: dict = {}
        for lab in self.labels:
            counts[lab] = counts.get(lab, 0) + 1
        return counts

    def class_indices(self) -> np.ndarray:
        """Position of every point's symbol within the universe (single-label only)."""
        if self.is_multilabel:
            raise DataError("class indices are defined for single-label assignments only")
        index = {sym: i for i, sym in enumerate(self.universe)}
        return np.fromiter((index[lab] for lab in self.labels), dtype=np.intp, count=self.n)

    def indicator(self) -> np.ndarray:
        """n x |universe| 0/1 matrix marking each point's symbols."""
        index = {sym: i for i, sym in enumerate(self.universe)}
        out = np.zeros((self.n, len(self.universe)))
        for row, lab in enumerate(self.labels):
            if self.is_multilabel:
                for sym in lab:
                    out[row, index[sym]] = 1.0
            else:
                out[row, index[lab]] = 1.0
        return out

    def take(self, indices) -> "LabelAssignment":
        picked = tuple(self.labels[i] for i in indices)
        if not picked:
            raise DataError("cannot take an empty subset of labels")
        return LabelAssignment(picked, self.universe, self.is_multilabel)


def _check_pairing(cloud: PointCloud, labels: LabelAssignment) -> None:
    if labels.n != cloud.n:
        raise DataError(f"{labels.n} labels for {cloud.n} points")


def sign_fn(label, other) -> int:
    """-1 when the two labels match (pulled together), +1 otherwise (pushed apart).

    Multi-label entries are compared as whole symbol sets.
    """
    return -1 if _canon(label) == _canon(other) else 1


def cost(point, members) -> float:
    """Mean Euclidean distance from ``point`` to every vector in ``members``."""
    members = np.asarray(members, dtype=np.float64)
    if members.size == 0:
        raise DataError("cost over an empty set is undefined")
    if members.ndim == 1:
        members = members[None, :]
    point = np.asarray(point, dtype=np.float64)
    return float(np.linalg.norm(members - point, axis=1).mean())


@dataclass(frozen=True)
class SilhouetteReport:
    """Per-point silhouette values in [-1, 1] and their unweighted mean."""

    per_point: np.ndarray
    mean: float


def silhouette(cloud: PointCloud, labels: LabelAssignment) -> SilhouetteReport:
    """Per-point silhouettes: (separation - cohesion) / max(separation, cohesion).

    Cohesion is the mean distance to the point's own cluster (self excluded);
    separation is the smallest mean distance to any other cluster. Points in
    singleton clusters score 0, as does the 0/0 case where both costs vanish.
    """
    _check_pairing(cloud, labels)
    codes, keys = labels.composite_codes()
    if len(keys) < 2:
        raise MetricError("silhouette undefined: need at least 2 distinct labels")
    if cloud.n < 2:
        raise MetricError("silhouette undefined: need at least 2 points")

    dist = np.sqrt(_pairwise_sq_dists(cloud.points))
    rows = np.arange(cloud.n)
    member = np.zeros((cloud.n, len(keys)))
    member[rows, codes] = 1.0
    counts = member.sum(axis=0)

    sums = dist @ member
    own_count = counts[codes]
    coh = sums[rows, codes] / np.maximum(own_count - 1.0, 1.0)
    mean_to = sums / counts[None, :]
    mean_to[rows, codes] = np.inf
    sep = mean_to.min(axis=1)

    denom = np.maximum(sep, coh)
    values = np.zeros(cloud.n)
    ok = denom > 0.0
    values[ok] = (sep[ok] - coh[ok]) / denom[ok]
    values[own_count == 1] = 0.0
    return SilhouetteReport(per_point=values, mean=float(values.mean()))


def silhouette_objective(cloud: PointCloud, labels: LabelAssignment) -> float:
    """Signed sum of squared distances over all ordered point pairs.

    Same-label pairs enter with weight -1 and cross-label pairs with +1, so
    the value grows as clusters tighten and drift apart.
    """
    _check_pairing(cloud, labels)
    if cloud.n < 2:
        raise DataError("objective needs at least 2 points")
    codes, _ = labels.composite_codes()
    signs = np.where(codes[:, None] == codes[None, :], -1.0, 1.0)
    return float((signs * _pairwise_sq_dists(cloud.points)).sum())


@dataclass(frozen=True)
class IsoScoreReport:
    """Isotropy defect in [0, 1], the derived score in [0, 1], and the
    cosine between the normalized variance vector and the all-ones vector."""

    defect: float
    score: float
    cos_alignment: float


def _normalized_variances(var: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(var))
    if norm == 0.0:
        raise MetricError("variance vector is zero; isotropy undefined")
    return (math.sqrt(var.size) / norm) * var


def _cos_alignment(vtilde: np.ndarray) -> float:
    # <v, 1> / (|v| |1|) with |v| = |1| = sqrt(d)
    return float(min(1.0, vtilde.sum() / vtilde.size))


def _defect_to_score(defect: float, d: int) -> float:
    k = (d - defect * defect * (d - math.sqrt(d))) ** 2 / d
    return min(1.0, max(0.0, (k - 1.0) / (d - 1.0)))


def isoscore(cloud: PointCloud) -> IsoScoreReport:
    """Isotropy of a cloud from its normalized variance vector.

    Pipeline: reorient onto the covariance eigenbasis, take per-dimension
    variances, rescale them to norm sqrt(d), measure the distance to the
    all-ones vector, and map defect 0 -> score 1, defect 1 -> score 0.
    """
    if cloud.n < 2 or cloud.d < 2:
        raise DataError("isotropy scoring needs n >= 2 points and d >= 2 dimensions")
    var = _variance_from_pairs(_pca_reorient(cloud.points))
    vtilde = _normalized_variances(var)
    d = cloud.d
    raw = float(np.linalg.norm(vtilde - 1.0))
    defect = min(1.0, raw / math.sqrt(2.0 * (d - math.sqrt(d))))
    return IsoScoreReport(
        defect=defect,
        score=_defect_to_score(defect, d),
        cos_alignment=_cos_alignment(vtilde),
    )


def isotropy_objective(cloud: PointCloud) -> float:
    """Cosine between the reoriented cloud's variance vector and all-ones.

    1 for perfectly isotropic clouds, falling toward 1/sqrt(d) as variance
    concentrates in a single direction.
    """
    var = _variance_from_pairs(_pca_reorient(cloud.points))
    return _cos_alignment(_normalized_variances(var))


def chord_cos_identity_residual(cloud: PointCloud) -> float:
    """Residual of the chord/half-angle identity tying defect to alignment.

    Both the normalized variance vector and the all-ones vector sit on the
    sphere of radius sqrt(d), so the squared distance between them over 4d,
    minus 1, must equal -cos^2(half the angle between them). Returns the
    absolute residual; < 1e-9 for every valid cloud.
    """
    if cloud.d < 1:
        raise DataError("empty cloud")
    var = _variance_from_pairs(_pca_reorient(cloud.points))
    vtilde = _normalized_variances(var)
    d = cloud.d
    chord_sq = float(np.linalg.norm(vtilde - 1.0) ** 2)
    cos_half_sq = 0.5 * (1.0 + _cos_alignment(vtilde))
    return abs(chord_sq / (4.0 * d) - 1.0 + cos_half_sq)


@dataclass(frozen=True)
class AuxIndices:
    """Classic centroid/diameter clustering validity indices.

    ``dunn`` and ``calinski_harabasz`` become unbounded when every cluster
    collapses to a point; they are kept as ``inf`` in memory and flagged
    (never serialized as raw infinities) by :meth:`to_json_dict`.
    """

    dunn: float
    calinski_harabasz: float
    davies_bouldin: float

    @property
    def dunn_unbounded(self) -> bool:
        return math.isinf(self.dunn)

    @property
    def calinski_harabasz_unbounded(self) -> bool:
        return math.isinf(self.calinski_harabasz)

    def to_json_dict(self) -> dict:
        def entry(value):
            return None if math.isinf(value) else value

        return {
            "dunn": entry(self.dunn),
            "dunn_unbounded": self.dunn_unbounded,
            "calinski_harabasz": entry(self.calinski_harabasz),
            "calinski_harabasz_unbounded": self.calinski_harabasz_unbounded,
            "davies_bouldin": entry(self.davies_bouldin),
            "davies_bouldin_unbounded": math.isinf(self.davies_bouldin),
        }


def aux_indices(cloud: PointCloud, labels: LabelAssignment) -> AuxIndices:
    """Dunn (min inter / max intra), Calinski-Harabasz, and Davies-Bouldin."""
    _check_pairing(cloud, labels)
    codes, keys = labels.composite_codes()
    k = len(keys)
    if k < 2:
        raise MetricError("clustering indices undefined: need at least 2 distinct labels")
    pts = cloud.points
    d2 = _pairwise_sq_dists(pts)
    if float(d2.max()) == 0.0:
        raise MetricError("all points identical; clustering indices undefined")
    dist = np.sqrt(d2)
    groups = [np.flatnonzero(codes == c) for c in range(k)]

    min_inter = math.inf
    max_intra = 0.0
    for i in range(k):
        block = dist[np.ix_(groups[i], groups[i])]
        if block.size:
            max_intra = max(max_intra, float(block.max()))
        for j in range(i + 1, k):
            min_inter = min(min_inter, float(dist[np.ix_(groups[i], groups[j])].min()))
    dunn = math.inf if max_intra == 0.0 else min_inter / max_intra

    centroids = np.stack([pts[g].mean(axis=0) for g in groups])
    grand_mean = pts.mean(axis=0)
    sizes = np.array([len(g) for g in groups], dtype=np.float64)
    between = float((sizes * ((centroids - grand_mean) ** 2).sum(axis=1)).sum())
    within = float(sum(((pts[g] - centroids[i]) ** 2).sum() for i, g in enumerate(groups)))
    n = cloud.n
    if within == 0.0:
        calinski = math.inf
    else:
        calinski = (between / (k - 1)) * ((n - k) / within)

    scatter = np.array(
        [float(np.linalg.norm(pts[g] - centroids[i], axis=1).mean()) for i, g in enumerate(groups)]
    )
    centroid_dist = np.sqrt(_pairwise_sq_dists(centroids))
    ratios = np.zeros(k)
    for i in range(k):
        worst = 0.0
        for j in range(k):
            if j == i:
                continue
            gap = centroid_dist[i, j]
            worst = max(worst, math.inf if gap == 0.0 else (scatter[i] + scatter[j]) / gap)
        ratios[i] = worst
    davies = float(ratios.mean())

    return AuxIndices(dunn=dunn, calinski_harabasz=calinski, davies_bouldin=davies)


def subsample(cloud: PointCloud, labels: LabelAssignment, cap, rng: np.random.Generator):
    """Uniform sample without replacement when the cloud exceeds ``cap``.

    Meant to be re-drawn per evaluation; pass the caller's generator. Returns
    the inputs unchanged when no cap applies.
    """
    _check_pairing(cloud, labels)
    if cap is None or cloud.n <= cap:
        return cloud, labels
    if cap < 1:
        raise DataError("sample cap must be a positive integer")
    idx = np.sort(rng.choice(cloud.n, size=cap, replace=False))
    return PointCloud(cloud.points[idx]), labels.take(idx)
