"""Full-batch optimization harness that updates embeddings directly.

Each run draws a fresh classifier head, then repeatedly evaluates the chosen
loss over the whole dataset, applies bias-corrected adaptive-moment updates
to both the point coordinates and the head, and records loss, mean
silhouette, and isotropy score on a fixed cadence. Runs are bit-reproducible
for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DataError, MetricError
from .geometry import PointCloud
from .metrics import LabelAssignment, isoscore, silhouette, subsample
from .objectives import (
    ClassifierHead,
    _bce_value_and_grads,
    _ce_value_and_grads,
    _enumerate_triples,
    _triplet_value_and_grads,
)

LOSS_KINDS = ("cross_entropy", "binary_cross_entropy_multilabel", "triplet")


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and harness settings for one experiment run."""

    steps: int
    loss_kind: str = "cross_entropy"
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    metric_cadence: int = 1
    sample_cap: int | None = None
    seed: int = 0
    use_bias: bool = False
    triplet_cap: int = 64
    triplet_samples: int = 4096

    def __post_init__(self):
        if self.steps < 1:
            raise DataError("steps must be >= 1")
        if not self.learning_rate > 0.0:
            raise DataError("learning rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise DataError("beta coefficients must lie in [0, 1)")
        if self.epsilon <= 0.0:
            raise DataError("epsilon must be positive")
        if self.metric_cadence < 1:
            raise DataError("metric cadence must be >= 1")
        if self.sample_cap is not None and self.sample_cap < 1:
            raise DataError("sample cap must be >= 1")
        if self.loss_kind not in LOSS_KINDS:
            raise DataError(f"unknown loss kind {self.loss_kind!r}; expected one of {LOSS_KINDS}")


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators and the update count."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, shape) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape), t=0)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, config: TrainConfig):
    """One bias-corrected adaptive-moment update; returns (params, state)."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise DataError("params, grads, and state shapes must agree")
    t = state.t + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grads
    v = config.beta2 * state.v + (1.0 - config.beta2) * grads * grads
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    updated = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return updated, AdamState(m=m, v=v, t=t)


class TrajectoryRecord(NamedTuple):
    step: int
    loss: float
    silhouette: float
    isoscore: float


@dataclass(frozen=True)
class Trajectory:
    """Per-update metric records; failed metric evaluations hold NaN."""

    records: tuple

    def __post_init__(self):
        steps = [r.step for r in self.records]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise DataError("trajectory steps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def write_trajectory(trajectory: Trajectory, path) -> None:
    """Write the trajectory CSV: header ``step,loss,silhouette,isoscore``.

    Reals use round-trip precision; NaN sentinels become empty fields.
    """
    lines = ["step,loss,silhouette,isoscore"]
    for rec in trajectory.records:
        lines.append(f"{rec.step},{_fmt(rec.loss)},{_fmt(rec.silhouette)},{_fmt(rec.isoscore)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trajectory(path) -> Trajectory:
    """Parse a trajectory CSV, mapping empty metric fields back to NaN."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read trajectory {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != "step,loss,silhouette,isoscore":
        raise DataError(f"{path}: missing trajectory header 'step,loss,silhouette,isoscore'")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise DataError(f"{path}: line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            step = int(parts[0])
            values = [float(p) if p.strip() else math.nan for p in parts[1:]]
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from exc
        records.append(TrajectoryRecord(step, *values))
    return Trajectory(records=tuple(records))


def _check_loss_compat(labels: LabelAssignment, loss_kind: str) -> None:
    if loss_kind == "cross_entropy" and labels.is_multilabel:
        raise DataError("cross-entropy needs a single-label dataset")
    if loss_kind == "binary_cross_entropy_multilabel" and not labels.is_multilabel:
        raise DataError("binary cross-entropy needs a multi-label dataset")
    if loss_kind == "triplet" and labels.is_multilabel:
        raise DataError("triplet training needs a single-label dataset")


def _sample_triples(codes: np.ndarray, count: int, rng: np.random.Generator):
    """Uniformly sample valid triples: anchor and positive share a label, negative differs."""
    eligible = [
        np.flatnonzero(codes == c)
        for c in np.unique(codes)
        if (codes == c).sum() >= 2 and (codes != c).any()
    ]
    if not eligible:
        raise DataError("no valid triplet: need a label with >= 2 members and >= 1 non-member")
    anchors = np.empty(count, dtype=np.intp)
    positives = np.empty(count, dtype=np.intp)
    negatives = np.empty(count, dtype=np.intp)
    for i in range(count):
        group = eligible[rng.integers(len(eligible))]
        a, p = rng.choice(group, size=2, replace=False)
        outside = np.flatnonzero(codes != codes[a])
        anchors[i], positives[i] = a, p
        negatives[i] = outside[rng.integers(outside.size)]
    return anchors, positives, negatives


def _safe_metrics(points: np.ndarray, labels: LabelAssignment, cap, rng):
    """Mean silhouette and isotropy score on the current points; NaN on failure."""
    try:
        cloud = PointCloud(points)
        sub_cloud, sub_labels = subsample(cloud, labels, cap, rng)
        try:
            sil = silhouette(sub_cloud, sub_labels).mean
        except MetricError:
            sil = math.nan
        try:
            iso = isoscore(sub_cloud).score
        except (MetricError, DataError):
            iso = math.nan
    except DataError:
        sil = math.nan
        iso = math.nan
    return sil, iso


def run_experiment(cloud: PointCloud, labels: LabelAssignment, config: TrainConfig) -> Trajectory:
    """Optimize the embeddings (and head) and track metrics along the way.

    Per step: full-batch loss and gradients, one adaptive-moment update of
    the point coordinates and of the head; on every cadence boundary the
    step's loss plus mean silhouette and isotropy score of the *updated*
    points are recorded. Metric failures (e.g. a collapsed cloud) record NaN
    and the run continues.
    """
    if labels.n != cloud.n:
        raise DataError(f"{labels.n} labels for {cloud.n} points")
    _check_loss_compat(labels, config.loss_kind)

    rng = np.random.default_rng(config.seed)
    points = cloud.points.copy()
    head = ClassifierHead.random(cloud.d, len(labels.universe), rng, with_bias=config.use_bias)

    point_state = AdamState.zeros(points.shape)
    weight_state = AdamState.zeros(head.weights.shape)
    bias_state = AdamState.zeros(head.bias.shape) if head.bias is not None else None

    codes = None
    fixed_triples = None
    class_idx = None
    targets = None
    if config.loss_kind == "cross_entropy":
        class_idx = labels.class_indices()
    elif config.loss_kind == "binary_cross_entropy_multilabel":
        targets = labels.indicator()
    else:
        codes, _ = labels.composite_codes()
        if cloud.n <= config.triplet_cap:
            fixed_triples = _enumerate_triples(codes)
            if fixed_triples[0].size == 0:
                raise DataError(
                    "no valid triplet: need a label with >= 2 members and >= 1 non-member"
                )

    records = []
    for step in range(1, config.steps + 1):
        if config.loss_kind == "cross_entropy":
            loss, g_pts, g_w, g_b = _ce_value_and_grads(points, class_idx, head)
        elif config.loss_kind == "binary_cross_entropy_multilabel":
            loss, g_pts, g_w, g_b = _bce_value_and_grads(points, targets, head)
        else:
            triples = (
                fixed_triples
                if fixed_triples is not None
                else _sample_triples(codes, config.triplet_samples, rng)
            )
            loss, g_pts = _triplet_value_and_grads(points, *triples)
            g_w = g_b = None

        points, point_state = adam_step(points, g_pts, point_state, config)
        if g_w is not None:
            new_weights, weight_state = adam_step(head.weights, g_w, weight_state, config)
            head.weights = new_weights
        if g_b is not None:
            new_bias, bias_state = adam_step(head.bias, g_b, bias_state, config)
            head.bias = new_bias

        if step % config.metric_cadence == 0:
            sil, iso = _safe_metrics(points, labels, config.sample_cap, rng)
            records.append(TrajectoryRecord(step=step, loss=loss, silhouette=sil, isoscore=iso))

    return Trajectory(records=tuple(records))
