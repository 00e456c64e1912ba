"""Report figures rendered to files (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_signal_figure(signal, path, title: str | None = None) -> Path:
    """Real and imaginary parts of <sigma_+>(T), with shot-noise bands if any."""
    path = Path(path)
    T = signal.grid.times
    fig, axes = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    for ax, part, err, label in (
        (axes[0], signal.values.real, signal.stderr_re, "Re"),
        (axes[1], signal.values.imag, signal.stderr_im, "Im"),
    ):
        ax.plot(T, part, lw=0.7)
        if err is not None and np.any(err > 0):
            ax.fill_between(T, part - err, part + err, alpha=0.3, lw=0)
        ax.set_ylabel(f"{label} polarization")
        ax.grid(True, alpha=0.3)
    axes[1].set_xlabel("scaled interaction time T")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_sweep_figure(sweep_points, path) -> Path:
    """Estimate-vs-oracle error per moment across the sweep parameter."""
    path = Path(path)
    by_moment: dict[str, list] = {}
    for point in sweep_points:
        for entry in point.entries:
            if entry.estimate is None or entry.estimate.abs_error is None:
                continue
            by_moment.setdefault(entry.moment, []).append(
                (float(point.parameter_value), entry.estimate.abs_error)
            )
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for moment, rows in sorted(by_moment.items()):
        rows.sort()
        xs = [r[0] for r in rows]
        ys = [r[1] for r in rows]
        ax.plot(xs, ys, marker="o", label=moment)
    ax.set_xlabel("sweep parameter")
    ax.set_ylabel("|estimate - oracle|")
    if by_moment and all(y > 0 for rows in by_moment.values() for _, y in rows):
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    if by_moment:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
