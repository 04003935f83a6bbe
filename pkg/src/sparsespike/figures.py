"""Figure rendering for run reports.

Plots are written to files next to the CSV logs; nothing is displayed
interactively.  The CSVs stay the canonical machine-readable output.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _read_csv(path):
    with open(path) as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    return rows


def training_curves(csv_path, out_path) -> Path:
    """Four-panel overview of a training run (loss, accuracy, sparsity, energy)."""
    rows = _read_csv(csv_path)
    epochs = [int(r["epoch"]) for r in rows]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6))
    panels = [
        ("loss", "training loss", False),
        ("accuracy", "test accuracy", False),
        ("sparsity", "link sparsity", False),
        ("energy_joules", "energy per eval (J)", True),
    ]
    for ax, (key, label, logy) in zip(axes.ravel(), panels):
        ax.plot(epochs, [float(r[key]) for r in rows], marker="o", ms=3)
        ax.set_xlabel("epoch")
        ax.set_ylabel(label)
        if logy:
            ax.set_yscale("log")
        ax.grid(alpha=0.3)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def comparison_bars(table, out_path) -> Path:
    """Log-scale bars for the activity/energy metrics of a two-net comparison."""
    keys = ("spike_count", "sops", "energy_joules")
    named = {name: (a, b) for name, a, b, _ in table}
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = range(len(keys))
    width = 0.38
    floor = 1e-15
    ax.bar([x - width / 2 for x in xs],
           [max(named[k][0], floor) for k in keys], width, label="a")
    ax.bar([x + width / 2 for x in xs],
           [max(named[k][1], floor) for k in keys], width, label="b")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(keys)
    ax.set_yscale("log")
    ax.legend()
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
