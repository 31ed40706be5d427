"""Command-line interface: generate, measure, train, correlate, plot.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
error. All randomness flows from explicit ``--seed`` flags; omitting one
means the documented default of 0, never environment entropy.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .datagen import MixtureSpec, MultilabelSpec, generate_mixture, load_dataset, save_dataset
from .errors import DataError, MetricError, NumericalError
from .metrics import aux_indices, isoscore, silhouette, subsample
from .stats import correlate_trajectory
from .training import LOSS_KINDS, TrainConfig, read_trajectory, run_experiment, write_trajectory

_LOSS_FLAGS = {"ce": LOSS_KINDS[0], "bce": LOSS_KINDS[1], "triplet": LOSS_KINDS[2]}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_seed(parser, default=0):
    parser.add_argument("--seed", type=int, default=default, help="deterministic seed (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isoclust", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    gen = sub.add_parser("generate", help="write a synthetic labeled dataset")
    gen.add_argument("--classes", type=int, default=4, help="number of Gaussian classes")
    gen.add_argument("--dim", type=int, default=16, help="embedding dimension")
    gen.add_argument("--per-class", type=int, default=100, help="points per class")
    gen.add_argument("--spread", type=float, default=1.0, help="scale of class-center placement")
    gen.add_argument("--within-std", type=float, default=1.0, help="within-class standard deviation")
    gen.add_argument("--multilabel-symbols", type=int, default=0,
                     help="number of extra tag symbols (> 0 switches to multi-label output)")
    gen.add_argument("--multilabel-prob", type=float, default=0.3,
                     help="probability of each tag per point")
    _add_seed(gen)
    gen.add_argument("--out", required=True, help="output dataset path")
    gen.set_defaults(func=cmd_generate)

    meas = sub.add_parser("measure", help="print metrics for a dataset")
    meas.add_argument("--data", required=True, help="dataset path")
    meas.add_argument("--sample", type=int, default=None,
                      help="evaluate on a uniform sample of this many points")
    _add_seed(meas)
    meas.add_argument("--json", action="store_true", help="emit one machine-readable object")
    meas.set_defaults(func=cmd_measure)

    train = sub.add_parser("train", help="optimize embeddings and record a trajectory")
    train.add_argument("--data", required=True, help="dataset path")
    train.add_argument("--loss", choices=sorted(_LOSS_FLAGS), default="ce")
    train.add_argument("--steps", type=int, default=500)
    train.add_argument("--lr", type=float, default=0.001)
    train.add_argument("--beta1", type=float, default=0.9)
    train.add_argument("--beta2", type=float, default=0.999)
    train.add_argument("--epsilon", type=float, default=1e-8)
    train.add_argument("--cadence", type=int, default=1, help="record metrics every K updates")
    train.add_argument("--sample", type=int, default=None,
                       help="metric sample cap (re-drawn per evaluation)")
    train.add_argument("--bias", action="store_true", help="train a bias term in the head")
    _add_seed(train)
    train.add_argument("--out", required=True, help="trajectory CSV path")
    train.set_defaults(func=cmd_train)

    corr = sub.add_parser("correlate", help="correlate silhouette and isotropy columns")
    corr.add_argument("--traj", required=True, help="trajectory CSV path")
    corr.add_argument("--json", action="store_true", help="emit one machine-readable object")
    corr.set_defaults(func=cmd_correlate)

    plot = sub.add_parser("plot", help="render a trajectory figure (SVG)")
    plot.add_argument("--traj", required=True, help="trajectory CSV path")
    plot.add_argument("--out", required=True, help="output figure path (.svg)")
    plot.add_argument("--scatter", action="store_true",
                      help="silhouette vs. isotropy scatter instead of the two-panel view")
    plot.set_defaults(func=cmd_plot)
    return parser


def cmd_generate(args) -> int:
    multilabel = None
    if args.multilabel_symbols > 0:
        multilabel = MultilabelSpec(num_symbols=args.multilabel_symbols,
                                    probability=args.multilabel_prob)
    if args.classes < 2 and multilabel is None:
        raise UsageError("--classes must be >= 2 for single-label datasets "
                         "(cluster metrics need at least two labels)")
    spec = MixtureSpec(
        num_classes=args.classes,
        dim=args.dim,
        points_per_class=args.per_class,
        center_spread=args.spread,
        within_std=args.within_std,
        multilabel=multilabel,
        seed=args.seed,
    )
    cloud, labels = generate_mixture(spec)
    save_dataset(cloud, labels, args.out)
    print(f"wrote {args.out}: n={cloud.n} d={cloud.d}")
    counts = labels.composite_counts()
    for key in sorted(counts, key=lambda k: (str(type(k)), sorted(k) if isinstance(k, frozenset) else k)):
        shown = ",".join(sorted(key)) if isinstance(key, frozenset) else key
        print(f"  {shown}: {counts[key]}")
    return 0


def _float_or_none(value: float):
    return None if (isinstance(value, float) and (math.isnan(value) or math.isinf(value))) else value


def cmd_measure(args) -> int:
    cloud, labels = load_dataset(args.data)
    n_total = cloud.n
    rng = np.random.default_rng(args.seed)
    cloud, labels = subsample(cloud, labels, args.sample, rng)

    sil = silhouette(cloud, labels)
    iso = isoscore(cloud)
    aux = aux_indices(cloud, labels)

    if args.json:
        payload = {
            "n": n_total,
            "n_used": cloud.n,
            "sampled": cloud.n != n_total,
            "d": cloud.d,
            "silhouette_mean": sil.mean,
            "isoscore": {
                "defect": iso.defect,
                "score": iso.score,
                "cos_alignment": iso.cos_alignment,
            },
            "indices": aux.to_json_dict(),
        }
        print(json.dumps(payload, sort_keys=True, allow_nan=False))
        return 0

    if cloud.n != n_total:
        print(f"sampled {cloud.n} of {n_total} points (seed {args.seed})")
    print(f"n={cloud.n} d={cloud.d}")
    print(f"silhouette mean:    {sil.mean:.6f}")
    print(f"isotropy score:     {iso.score:.6f} (defect {iso.defect:.6f}, cos {iso.cos_alignment:.6f})")
    dunn = "inf (unbounded)" if aux.dunn_unbounded else f"{aux.dunn:.6f}"
    ch = "inf (unbounded)" if aux.calinski_harabasz_unbounded else f"{aux.calinski_harabasz:.6f}"
    print(f"dunn:               {dunn}")
    print(f"calinski-harabasz:  {ch}")
    print(f"davies-bouldin:     {aux.davies_bouldin:.6f}")
    return 0


def cmd_train(args) -> int:
    cloud, labels = load_dataset(args.data)
    config = TrainConfig(
        steps=args.steps,
        loss_kind=_LOSS_FLAGS[args.loss],
        learning_rate=args.lr,
        beta1=args.beta1,
        beta2=args.beta2,
        epsilon=args.epsilon,
        metric_cadence=args.cadence,
        sample_cap=args.sample,
        seed=args.seed,
        use_bias=args.bias,
    )
    trajectory = run_experiment(cloud, labels, config)
    write_trajectory(trajectory, args.out)

    first, last = trajectory.records[0], trajectory.records[-1]
    print(f"wrote {args.out}: {len(trajectory)} records (steps {first.step}..{last.step})")
    for name in ("loss", "silhouette", "isoscore"):
        a, b = getattr(first, name), getattr(last, name)
        if math.isnan(a) or math.isnan(b):
            print(f"  {name}: first={a} last={b}")
        else:
            print(f"  {name}: first={a:.6f} last={b:.6f} delta={b - a:+.6f}")
    return 0


def cmd_correlate(args) -> int:
    trajectory = read_trajectory(args.traj)
    report, dropped = correlate_trajectory(trajectory)
    if args.json:
        payload = {
            "pearson_r": report.pearson_r,
            "spearman_rho": report.spearman_rho,
            "n": report.n,
            "dropped": dropped,
        }
        print(json.dumps(payload, sort_keys=True, allow_nan=False))
        return 0
    print(f"pearson r:    {report.pearson_r:+.6f}")
    print(f"spearman rho: {report.spearman_rho:+.6f}")
    print(f"observations: {report.n} (dropped {dropped} incomplete rows)")
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_scatter, plot_trajectory

    trajectory = read_trajectory(args.traj)
    if args.scatter:
        plot_scatter(trajectory, args.out)
    else:
        plot_trajectory(trajectory, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"isoclust: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"isoclust: data error: {exc}", file=sys.stderr)
        return 2
    except (MetricError, NumericalError) as exc:
        print(f"isoclust: numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
