"""Report figures. Uses the non-interactive Agg backend; every function
writes a PNG and returns its path."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

HOUR = 3600.0
DPI = 120


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_levels(series: dict, path) -> Path:
    """Lake level of every scenario against the sea level and the target."""
    fig, ax = plt.subplots(figsize=(9, 4.5))
    first = next(iter(series.values()))
    t = first.column("t") / HOUR
    ax.plot(t, first.column("h_sea"), color="0.6", lw=1.0, label="sea")
    for label, ts in series.items():
        ax.plot(ts.column("t") / HOUR, ts.column("h_lake"), lw=1.0, label=label)
    ax.axhline(first.scenario.h_target, color="k", ls="--", lw=0.8, label="target")
    ax.set_xlabel("t (h)")
    ax.set_ylabel("level (m)")
    ax.legend(fontsize=7, ncol=2, loc="upper right")
    return _save(fig, path)


def plot_gate_series(series: dict, period: float, path) -> Path:
    """Gate opening and total discharge over the last tidal cycle."""
    fig, (ax_a, ax_q) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    for label, ts in series.items():
        t = ts.column("t")
        keep = t >= t[-1] - period
        th = t[keep] / HOUR
        ax_a.plot(th, ts.column("a")[keep], lw=1.0, label=label)
        ax_q.plot(th, ts.column("q_total")[keep], lw=1.0, label=label)
    ax_a.set_ylabel("opening a (m)")
    ax_q.set_ylabel("Q total (m$^3$/s)")
    ax_q.set_xlabel("t (h)")
    ax_a.legend(fontsize=7, ncol=2)
    return _save(fig, path)


def plot_psi(profiles, path, threshold: float | None = None) -> Path:
    """Psi(x) for each (label, [StabilityProfile, ...]) pair."""
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for label, profs in profiles:
        for p in profs:
            ax.plot(p.x, p.psi, lw=1.0, label=f"{label}, alpha={p.alpha:g}")
    if threshold is not None:
        ax.axhline(threshold, color="k", ls="--", lw=0.8, label="threshold")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("Psi")
    ax.legend(fontsize=7, ncol=2)
    return _save(fig, path)


def plot_analysis(field, profiles, path) -> Path:
    """Speed field with the surface line, and the Psi profiles below it."""
    fig, (ax_f, ax_p) = plt.subplots(2, 1, figsize=(9, 6.5), sharex=True)
    mesh = ax_f.pcolormesh(field.x, field.z, np.ma.masked_invalid(field.speed.T), shading="auto", cmap="viridis")
    ax_f.plot(field.x, field.surface, color="w", lw=1.0)
    fig.colorbar(mesh, ax=ax_f, label="speed (m/s)")
    ax_f.set_ylabel("z (m)")
    for p in profiles:
        ax_p.plot(p.x, p.psi, lw=1.0, label=f"alpha={p.alpha:g}")
    ax_p.set_xlabel("x (m)")
    ax_p.set_ylabel("Psi")
    ax_p.legend(fontsize=8)
    return _save(fig, path)
