"""Trajectory figures rendered to self-contained SVG files.

The default report is a two-panel figure: mean silhouette against the
update step, and the isotropy score against the step on a log-scaled axis
(the log transform is presentation-only; trajectory CSVs keep raw values).
The scatter variant plots silhouette against isotropy score directly.
Output is deterministic: no timestamps, fixed id hashing.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .errors import DataError  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "isoclust"

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def _usable_rows(trajectory):
    steps = trajectory.column("step")
    sil = trajectory.column("silhouette")
    iso = trajectory.column("isoscore")
    keep = ~(np.isnan(sil) | np.isnan(iso))
    if not keep.any():
        raise DataError("empty trajectory: no rows with both metrics present")
    return steps[keep], sil[keep], iso[keep]


def plot_trajectory(trajectory, out_path) -> None:
    """Two stacked panels: silhouette vs. step and log-scaled isotropy vs. step."""
    steps, sil, iso = _usable_rows(trajectory)
    style = {"marker": "o", "markersize": 3} if steps.size == 1 else {}
    fig, (ax_sil, ax_iso) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    ax_sil.plot(steps, sil, color="tab:blue", **style)
    ax_sil.set_ylabel("mean silhouette")
    ax_iso.plot(steps, iso, color="tab:red", **style)
    ax_iso.set_yscale("log")
    ax_iso.set_ylabel("isotropy score (log)")
    ax_iso.set_xlabel("update step")
    fig.tight_layout()
    try:
        fig.savefig(out_path, **_SAVE_KW)
    finally:
        plt.close(fig)


def plot_scatter(trajectory, out_path) -> None:
    """Silhouette against isotropy score, one point per trajectory row."""
    _, sil, iso = _usable_rows(trajectory)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.scatter(sil, iso, s=12, color="tab:purple")
    ax.set_xlabel("mean silhouette")
    ax.set_ylabel("isotropy score")
    fig.tight_layout()
    try:
        fig.savefig(out_path, **_SAVE_KW)
    finally:
        plt.close(fig)
