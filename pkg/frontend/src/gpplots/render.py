"""Accuracy-versus-runtime panel construction and figure emission."""

import csv
import math
import os
import warnings
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .reader import read_records  # noqa: E402

EXACT_METHOD = "exact"


def build_panels(rows, tasks=None, metrics=None):
    """Group rows into panel data.

    Returns ``{(task, metric): {method: [point, ...]}}`` where each point is
    ``{"tier", "tier_value", "mean_value", "mean_wall_seconds", "n"}``, the
    mean taken over reps.  Points within a series are ordered by tier.
    Non-finite values are excluded from the means.
    """
    groups = defaultdict(list)
    for r in rows:
        if tasks is not None and r["task"] not in tasks:
            continue
        if metrics is not None and r["metric"] not in metrics:
            continue
        key = (r["task"], r["metric"])
        groups[(key, r["method"], r["tier"], r["tier_value"])].append(r)

    panels = defaultdict(lambda: defaultdict(list))
    for (key, method, tier, tier_value), rs in sorted(
            groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        vals = [r["value"] for r in rs if math.isfinite(r["value"])]
        walls = [r["wall_seconds"] for r in rs if math.isfinite(r["value"])]
        if not vals:
            continue
        panels[key][method].append({
            "tier": tier,
            "tier_value": tier_value,
            "mean_value": sum(vals) / len(vals),
            "mean_wall_seconds": sum(walls) / len(walls),
            "n": len(vals),
        })
    return {k: dict(v) for k, v in panels.items()}


def _draw_panel(task, metric, series):
    """Return a matplotlib Figure for one (task, metric) panel.

    Approximate methods become point-and-line series over a log-scaled time
    axis; an ``exact`` series becomes a dashed horizontal reference line at
    its mean value.
    """
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for method in sorted(series):
        pts = series[method]
        if method == EXACT_METHOD:
            ref = sum(p["mean_value"] for p in pts) / len(pts)
            ax.axhline(ref, linestyle="--", color="black",
                       label=f"{EXACT_METHOD} ({ref:.4g})")
            continue
        x = [p["mean_wall_seconds"] for p in pts]
        y = [p["mean_value"] for p in pts]
        ax.plot(x, y, marker="o", label=method)
    ax.set_xscale("log")
    ax.set_xlabel("wall time (s)")
    ax.set_ylabel(metric)
    ax.set_title(f"{task}: {metric} vs runtime")
    ax.legend()
    fig.tight_layout()
    return fig


def _write_sidecar(path, series):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "tier", "tier_value", "mean_value",
                    "mean_wall_seconds", "n"])
        for method in sorted(series):
            for p in series[method]:
                w.writerow([method, p["tier"], p["tier_value"],
                            repr(p["mean_value"]),
                            repr(p["mean_wall_seconds"]), p["n"]])


def render_tradeoff(csv_path, out_dir, tasks=None, metrics=None):
    """Render one PNG + sidecar aggregate CSV per (task, metric) panel.

    Returns the list of PNG paths written.  A CSV with a valid header but
    no usable rows yields zero panels and a warning.
    """
    rows = read_records(csv_path)
    panels = build_panels(rows, tasks=tasks, metrics=metrics)
    if not panels:
        warnings.warn(f"no plottable rows in {csv_path}; nothing rendered",
                      stacklevel=2)
        return []
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for (task, metric), series in sorted(panels.items()):
        stem = os.path.join(out_dir, f"{task}_{metric}")
        fig = _draw_panel(task, metric, series)
        fig.savefig(stem + ".png", dpi=120)
        plt.close(fig)
        _write_sidecar(stem + ".csv", series)
        written.append(stem + ".png")
    return written
