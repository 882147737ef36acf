"""Figure rendering for benchmark and spectrum reports.

Each report command writes delimited output as the primary artifact; these
helpers render a companion PNG next to it.  matplotlib is imported lazily
with the Agg backend so headless runs and figure-free commands never touch
a display.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

__all__ = ["bench_figure", "spectrum_figure"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def bench_figure(rows, path):
    """Three panels over the rank grid: relative error, PSNR, wall time.

    ``rows`` are the benchmark dicts (method, k, trial, rel_err, psnr,
    wall_ms); trials are averaged per method and rank.
    """
    plt = _pyplot()
    grouped = defaultdict(lambda: defaultdict(list))
    for row in rows:
        grouped[row["method"]][row["k"]].append(row)

    fig, axes = plt.subplots(1, 3, figsize=(12.5, 3.8))
    panels = (("rel_err", "relative error"), ("psnr", "PSNR (dB)"),
              ("wall_ms", "wall time (ms)"))
    for method, by_k in grouped.items():
        ks = sorted(by_k)
        for ax, (field, _) in zip(axes, panels):
            means = [float(np.mean([r[field] for r in by_k[k]])) for k in ks]
            ax.plot(ks, means, marker="o", label=method)
    for ax, (field, label) in zip(axes, panels):
        ax.set_xlabel("k")
        ax.set_ylabel(label)
        if field == "rel_err":
            ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def spectrum_figure(columns, path):
    """Normalized singular-value profiles, one line per power count."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for q in sorted(columns):
        sigma = columns[q]
        ax.semilogy(np.arange(1, len(sigma) + 1), sigma, label=f"q = {q}")
    ax.set_xlabel("index")
    ax.set_ylabel("normalized singular value")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
