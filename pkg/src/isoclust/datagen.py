"""Synthetic Gaussian-mixture datasets and text-line (de)serialization.

Cluster centers come from one isotropic Gaussian scaled by ``center_spread``
and points from isotropic Gaussians around them with ``within_std``, giving
two interpretable knobs: the spread ratio drives initial cluster structure,
blob isotropy drives the initial isotropy score. Multi-label datasets tack
independent tag symbols onto each point's class symbol.

File format: UTF-8 text, one record per line,
``id<TAB>label[,label...]<TAB>v1 v2 ... vd`` with round-trip decimal reals.
Lines starting with ``#`` are comments; ``# labels: multi`` (written on
save) pins the label arity so single-symbol multi-label files round-trip.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .geometry import PointCloud
from .metrics import LabelAssignment

_SYMBOL_RE = re.compile(r"^[^\s,]+$")


@dataclass(frozen=True)
class MultilabelSpec:
    """Extra tag symbols attached to points independently with one probability."""

    num_symbols: int
    probability: float

    def __post_init__(self):
        if self.num_symbols < 1:
            raise DataError("multilabel spec needs at least one tag symbol")
        if not 0.0 <= self.probability <= 1.0:
            raise DataError("tag probability must lie in [0, 1]")


@dataclass(frozen=True)
class MixtureSpec:
    """Shape of a synthetic labeled Gaussian mixture."""

    num_classes: int
    dim: int
    points_per_class: int | tuple
    center_spread: float = 1.0
    within_std: float = 1.0
    multilabel: MultilabelSpec | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 1 or self.dim < 1:
            raise DataError("need at least one class and one dimension")
        if not self.within_std > 0.0:
            raise DataError("within-class standard deviation must be positive")
        if self.center_spread < 0.0:
            raise DataError("center spread must be nonnegative")
        if any(c < 1 for c in self.class_counts()):
            raise DataError("every class needs at least one point")

    def class_counts(self) -> tuple:
        if isinstance(self.points_per_class, int):
            return (self.points_per_class,) * self.num_classes
        counts = tuple(int(c) for c in self.points_per_class)
        if len(counts) != self.num_classes:
            raise DataError(f"{len(counts)} class sizes for {self.num_classes} classes")
        return counts


def generate_mixture(spec: MixtureSpec) -> tuple[PointCloud, LabelAssignment]:
    """Draw the mixture; identical spec and seed give identical output."""
    rng = np.random.default_rng(spec.seed)
    counts = spec.class_counts()
    centers = rng.standard_normal((spec.num_classes, spec.dim)) * spec.center_spread
    blocks = [
        centers[c] + rng.standard_normal((counts[c], spec.dim)) * spec.within_std
        for c in range(spec.num_classes)
    ]
    cloud = PointCloud(np.vstack(blocks))

    class_syms = [f"c{c}" for c in range(spec.num_classes)]
    per_point_class = [class_syms[c] for c in range(spec.num_classes) for _ in range(counts[c])]
    if spec.multilabel is None:
        labels = LabelAssignment.single(per_point_class, universe=class_syms)
    else:
        tags = [f"t{j}" for j in range(spec.multilabel.num_symbols)]
        draws = rng.random((cloud.n, len(tags))) < spec.multilabel.probability
        label_sets = [
            {per_point_class[i], *(tags[j] for j in np.flatnonzero(draws[i]))}
            for i in range(cloud.n)
        ]
        labels = LabelAssignment.multi(label_sets, universe=sorted(class_syms + tags))
    return cloud, labels


def _format_label(label, is_multilabel: bool) -> str:
    symbols = sorted(label) if is_multilabel else [label]
    for sym in symbols:
        if not _SYMBOL_RE.match(sym):
            raise DataError(f"symbol {sym!r} contains whitespace or ',' and cannot be serialized")
    return ",".join(symbols)


def save_dataset(cloud: PointCloud, labels: LabelAssignment, path) -> None:
    """Write the line format with full round-trip precision."""
    if labels.n != cloud.n:
        raise DataError(f"{labels.n} labels for {cloud.n} points")
    lines = ["# isoclust dataset", f"# labels: {'multi' if labels.is_multilabel else 'single'}"]
    for i in range(cloud.n):
        vec = " ".join(repr(float(x)) for x in cloud.points[i])
        lines.append(f"{i}\t{_format_label(labels.labels[i], labels.is_multilabel)}\t{vec}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write dataset {path}: {exc}") from exc


def load_dataset(path) -> tuple[PointCloud, LabelAssignment]:
    """Read the line format back; errors carry the offending line number."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc

    declared_multi = None
    rows, label_fields = [], []
    dim = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            directive = stripped[1:].strip()
            if directive.startswith("labels:"):
                declared_multi = directive.split(":", 1)[1].strip() == "multi"
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{path}: line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
        rec_id, label_field, vec_field = parts
        symbols = [s for s in label_field.split(",") if s]
        if not symbols:
            raise DataError(f"{path}: line {lineno}: record {rec_id!r} has no labels")
        try:
            values = [float(tok) for tok in vec_field.split()]
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: record {rec_id!r}: {exc}") from exc
        if not values:
            raise DataError(f"{path}: line {lineno}: record {rec_id!r} has no vector")
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise DataError(
                f"{path}: line {lineno}: record {rec_id!r} has dimension "
                f"{len(values)}, expected {dim}"
            )
        rows.append(values)
        label_fields.append(symbols)

    if not rows:
        raise DataError(f"{path}: empty dataset")
    cloud = PointCloud(np.array(rows, dtype=np.float64))
    is_multi = declared_multi if declared_multi is not None else any(len(s) > 1 for s in label_fields)
    if is_multi:
        labels = LabelAssignment.multi([set(s) for s in label_fields])
    else:
        for lineno_syms in label_fields:
            if len(lineno_syms) > 1:
                raise DataError(f"{path}: multi-symbol record in a dataset declared single-label")
        labels = LabelAssignment.single([s[0] for s in label_fields])
    return cloud, labels
