"""Linear-classifier and triplet objectives with analytic gradients.

The classifier scores points against one column vector per class; its
global objective rewards association with the own-class column and
dissociation from every other. Losses return full-batch gradients for both
the point coordinates and the head so the optimization harness can update
embeddings directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .geometry import PointCloud, _pairwise_sq_dists
from .metrics import LabelAssignment, _check_pairing


@dataclass
class ClassifierHead:
    """Output projection: column ``k`` of ``weights`` is the vector for class ``k``."""

    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise DataError("head weights must be a d x n_classes matrix")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
            if self.bias.shape != (self.weights.shape[1],):
                raise DataError("bias length must match the number of classes")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def random(cls, dim: int, n_classes: int, rng: np.random.Generator, with_bias: bool = False):
        """Entries uniform on [-1/sqrt(d), +1/sqrt(d)], the usual linear-layer default."""
        bound = 1.0 / math.sqrt(dim)
        weights = rng.uniform(-bound, bound, size=(dim, n_classes))
        bias = rng.uniform(-bound, bound, size=n_classes) if with_bias else None
        return cls(weights=weights, bias=bias)


def _check_head(cloud: PointCloud, labels: LabelAssignment, head: ClassifierHead) -> None:
    if head.dim != cloud.d:
        raise DataError(f"head dimension {head.dim} != cloud dimension {cloud.d}")
    if head.n_classes != len(labels.universe):
        raise DataError(
            f"head has {head.n_classes} columns for {len(labels.universe)} symbols"
        )


def dot_distance_identity(d, c) -> tuple[float, float]:
    """Dot product alongside its half-sum-of-norms restatement.

    Returns (lhs, rhs) with lhs = <d, c> and
    rhs = (|d|^2 + |c|^2 - |d - c|^2) / 2; the two agree within 1e-9.
    """
    d = np.asarray(d, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if d.shape != c.shape:
        raise DataError(f"dimension mismatch: {d.shape} vs {c.shape}")
    lhs = float(d @ c)
    rhs = 0.5 * float(d @ d + c @ c - (d - c) @ (d - c))
    return lhs, rhs


def _signs_vs_universe(labels: LabelAssignment) -> np.ndarray:
    """n x K matrix: -1 at each point's own class column, +1 elsewhere."""
    idx = labels.class_indices()
    signs = np.ones((labels.n, len(labels.universe)))
    signs[np.arange(labels.n), idx] = -1.0
    return signs


def classifier_objective(cloud: PointCloud, labels: LabelAssignment, head: ClassifierHead) -> float:
    """Global objective: negated sign-weighted sum of point/class dot products.

    Single-label only; head columns follow the universe ordering. Bias, if
    present on the head, plays no part (the objective is over dot products).
    """
    _check_pairing(cloud, labels)
    if labels.is_multilabel:
        raise DataError("classifier objective is defined for single-label assignments")
    _check_head(cloud, labels, head)
    scores = cloud.points @ head.weights
    return float(-(_signs_vs_universe(labels) * scores).sum())


@dataclass(frozen=True)
class ClassifierObjectiveTerms:
    """Expanded form of the classifier objective.

    ``point_norm_term``  : -(K - 2)/2 * sum of squared point norms
    ``class_norm_term``  : -sum over classes of (n - 2 n_k)/2 * |c_k|^2
    ``signed_dist_term`` : +1/2 * sign-weighted point-to-class squared distances

    Both norm terms vanish for balanced binary problems. ``total`` matches
    the direct form within 1e-9.
    """

    point_norm_term: float
    class_norm_term: float
    signed_dist_term: float

    @property
    def total(self) -> float:
        return self.point_norm_term + self.class_norm_term + self.signed_dist_term


def classifier_objective_terms(
    cloud: PointCloud, labels: LabelAssignment, head: ClassifierHead
) -> ClassifierObjectiveTerms:
    """Decompose the classifier objective into norm and signed-distance terms."""
    _check_pairing(cloud, labels)
    if labels.is_multilabel:
        raise DataError("classifier objective is defined for single-label assignments")
    _check_head(cloud, labels, head)
    pts = cloud.points
    n, k = cloud.n, head.n_classes
    idx = labels.class_indices()
    class_sizes = np.bincount(idx, minlength=k).astype(np.float64)

    point_norm_term = -0.5 * (k - 2) * float((pts * pts).sum())
    class_norm_term = -0.5 * float(
        ((n - 2.0 * class_sizes) * (head.weights * head.weights).sum(axis=0)).sum()
    )
    # squared distances between every point and every class column
    cross = (
        (pts * pts).sum(axis=1)[:, None]
        + (head.weights * head.weights).sum(axis=0)[None, :]
        - 2.0 * pts @ head.weights
    )
    signed_dist_term = 0.5 * float((_signs_vs_universe(labels) * cross).sum())
    return ClassifierObjectiveTerms(point_norm_term, class_norm_term, signed_dist_term)


@dataclass(frozen=True)
class LossResult:
    """Full-batch loss value and gradients for points, head weights, and bias."""

    loss: float
    grad_points: np.ndarray
    grad_weights: np.ndarray
    grad_bias: np.ndarray | None


def _logits(pts: np.ndarray, head: ClassifierHead) -> np.ndarray:
    logits = pts @ head.weights
    if head.bias is not None:
        logits = logits + head.bias
    return logits


def _ce_value_and_grads(pts, class_idx, head):
    n = pts.shape[0]
    logits = _logits(pts, head)
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), class_idx].mean())

    delta = probs
    delta[np.arange(n), class_idx] -= 1.0
    delta /= n
    grad_points = delta @ head.weights.T
    grad_weights = pts.T @ delta
    grad_bias = delta.sum(axis=0) if head.bias is not None else None
    return loss, grad_points, grad_weights, grad_bias


def cross_entropy_loss(cloud: PointCloud, labels: LabelAssignment, head: ClassifierHead) -> LossResult:
    """Mean softmax cross-entropy over the full batch, with analytic gradients."""
    _check_pairing(cloud, labels)
    if labels.is_multilabel:
        raise DataError("cross-entropy needs a single-label assignment")
    _check_head(cloud, labels, head)
    loss, gp, gw, gb = _ce_value_and_grads(cloud.points, labels.class_indices(), head)
    return LossResult(loss, gp, gw, gb)


def _bce_value_and_grads(pts, targets, head):
    n, k = targets.shape
    logits = _logits(pts, head)
    # stable sigmoid BCE: max(z,0) - z*y + log(1 + exp(-|z|))
    per_entry = np.maximum(logits, 0.0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))
    loss = float(per_entry.mean())

    sig = 1.0 / (1.0 + np.exp(-logits))
    delta = (sig - targets) / (n * k)
    grad_points = delta @ head.weights.T
    grad_weights = pts.T @ delta
    grad_bias = delta.sum(axis=0) if head.bias is not None else None
    return loss, grad_points, grad_weights, grad_bias


def bce_multilabel_loss(cloud: PointCloud, labels: LabelAssignment, head: ClassifierHead) -> LossResult:
    """Per-symbol sigmoid binary cross-entropy, averaged over points and symbols."""
    _check_pairing(cloud, labels)
    if not labels.is_multilabel:
        raise DataError("binary cross-entropy needs a multi-label assignment")
    _check_head(cloud, labels, head)
    loss, gp, gw, gb = _bce_value_and_grads(cloud.points, labels.indicator(), head)
    return LossResult(loss, gp, gw, gb)


def triplet_loss(anchor, positive, negative) -> float:
    """Hinge of anchor-positive distance minus anchor-negative distance (no margin)."""
    anchor = np.asarray(anchor, dtype=np.float64)
    positive = np.asarray(positive, dtype=np.float64)
    negative = np.asarray(negative, dtype=np.float64)
    if not (anchor.shape == positive.shape == negative.shape):
        raise DataError("triplet vectors must share one dimension")
    gap = float(np.linalg.norm(anchor - positive) - np.linalg.norm(anchor - negative))
    return max(gap, 0.0)


def sign_wgt(label, other, counts: dict, total: int) -> int:
    """Pair weight from the anchor label's cluster size.

    Same label: |cluster| - |dataset| (negative); different: |cluster| - 1.
    ``counts`` maps labels to cluster sizes and must sum to ``total``.
    """
    if sum(counts.values()) != total:
        raise DataError("label counts do not sum to the dataset size")
    if label not in counts:
        raise DataError(f"unknown label: {label!r}")
    size = counts[label]
    return size - total if label == other else size - 1


def _enumerate_triples(codes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All (anchor, positive, negative) index triples with matching anchor/positive labels."""
    anchors, positives, negatives = [], [], []
    n = codes.size
    for code in np.unique(codes):
        inside = np.flatnonzero(codes == code)
        outside = np.flatnonzero(codes != code)
        if inside.size < 2 or outside.size == 0:
            continue
        for a in inside:
            for p in inside:
                if p == a:
                    continue
                anchors.append(np.full(outside.size, a))
                positives.append(np.full(outside.size, p))
                negatives.append(outside)
    if not anchors:
        return (np.empty(0, dtype=np.intp),) * 3
    return (
        np.concatenate(anchors).astype(np.intp),
        np.concatenate(positives).astype(np.intp),
        np.concatenate(negatives).astype(np.intp),
    )


def triplet_objective_and_bound(cloud: PointCloud, labels: LabelAssignment) -> tuple[float, float]:
    """Negated total triplet hinge loss and its sign-weighted distance bound.

    The objective sums -max(|a-p| - |a-n|, 0) over every valid triple; the
    bound sums sign_wgt-weighted distances over all ordered point pairs and
    always dominates the objective.
    """
    _check_pairing(cloud, labels)
    if labels.is_multilabel:
        raise DataError("triplet objective is defined for single-label assignments")
    codes, keys = labels.composite_codes()
    dist = np.sqrt(_pairwise_sq_dists(cloud.points))

    anchors, positives, negatives = _enumerate_triples(codes)
    if anchors.size == 0:
        raise DataError("no valid triplet: need a label with >= 2 members and >= 1 non-member")
    hinges = np.maximum(dist[anchors, positives] - dist[anchors, negatives], 0.0)
    objective = float(-hinges.sum())

    sizes = np.bincount(codes, minlength=len(keys)).astype(np.float64)
    anchor_sizes = sizes[codes]
    same = codes[:, None] == codes[None, :]
    weights = np.where(same, anchor_sizes[:, None] - cloud.n, anchor_sizes[:, None] - 1.0)
    bound = float((weights * dist).sum())
    return objective, bound


def _triplet_value_and_grads(pts, anchors, positives, negatives):
    """Mean hinge loss over the given triples and its gradient for the points."""
    diff_ap = pts[anchors] - pts[positives]
    diff_an = pts[anchors] - pts[negatives]
    dist_ap = np.linalg.norm(diff_ap, axis=1)
    dist_an = np.linalg.norm(diff_an, axis=1)
    hinge = dist_ap - dist_an
    active = hinge > 0.0
    loss = float(np.maximum(hinge, 0.0).mean())

    grad = np.zeros_like(pts)
    if active.any():
        scale = 1.0 / hinge.size
        # unit vectors; zero-length differences contribute no gradient
        with np.errstate(divide="ignore", invalid="ignore"):
            unit_ap = np.where(dist_ap[:, None] > 0.0, diff_ap / dist_ap[:, None], 0.0)
            unit_an = np.where(dist_an[:, None] > 0.0, diff_an / dist_an[:, None], 0.0)
        act = np.flatnonzero(active)
        np.add.at(grad, anchors[act], scale * (unit_ap[act] - unit_an[act]))
        np.add.at(grad, positives[act], -scale * unit_ap[act])
        np.add.at(grad, negatives[act], scale * unit_an[act])
    return loss, grad
