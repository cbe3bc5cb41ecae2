"""Figures written next to the CSV outputs when the CLI runs with --plot.

Everything renders through the Agg backend straight to PNG files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "lines.linewidth": 1.0,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # drop the Software tag so reruns give identical bytes
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def equilibrium_figure(positions, path, title=None) -> Path:
    x = np.asarray(positions)
    with plt.rc_context(STYLE):
        fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6.4, 4.8), sharex=True)
        ax0.hlines(0, 0, 1, color="0.6")
        ax0.plot(x, np.zeros_like(x), "o", ms=3)
        ax0.set_yticks([])
        ax0.set_title(title or f"equilibrium, n = {x.size}")
        mid = 0.5 * (x[1:] + x[:-1])
        ax1.plot(mid, np.diff(x), ".-")
        ax1.set_xlabel("position on the needle")
        ax1.set_ylabel("gap to next charge")
        fig.tight_layout()
        return _save(fig, path)


def trajectory_figure(times, positions, path, title=None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(times, positions, lw=0.6)
        ax.set_xlabel("t")
        ax.set_ylabel("x_i(t)")
        ax.set_ylim(-0.02, 1.02)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def cdf_figure(curves, path, title=None) -> Path:
    """``curves``: iterable of (label, jump_points) drawn as step functions."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 5.0))
        ax.plot([0, 1], [0, 1], color="k", lw=0.8, ls="--", label="uniform")
        for label, pts in curves:
            pts = np.sort(np.asarray(pts))
            n = pts.size
            xs = np.concatenate(([0.0], pts, [1.0]))
            ys = np.concatenate(([0.0], np.arange(1, n + 1) / n, [1.0]))
            ax.step(xs, ys, where="post", label=label)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("x")
        ax.set_ylabel("F(x)")
        ax.legend(loc="upper left")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def dyadic_figure(rows, path) -> Path:
    """rows: (n, gamma_label, index, position)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label in dict.fromkeys(r[1] for r in rows):
            pick = [r for r in rows if r[1] == label]
            ns = [r[0] for r in pick]
            ax.plot(ns, [r[3] for r in pick], "o-", ms=3, label=f"gamma = {label}")
            num, den = (int(v) for v in label.split("/"))
            ax.axhline(num / den, color="0.5", lw=0.6, ls=":")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("number of charges")
        ax.set_ylabel("position of the tracked charge")
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)


def series_figure(xs, series, path, xlabel, ylabel, logx=False, logy=False, reference=None) -> Path:
    """``series``: mapping label -> y values over ``xs``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, ys in series.items():
            ax.plot(xs, ys, "o-", ms=3, label=label)
        if reference is not None:
            ax.axhline(reference, color="0.5", lw=0.6, ls=":")
        if logx:
            ax.set_xscale("log", base=2)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        return _save(fig, path)


def fieldmap_figure(rows, path, title=None) -> Path:
    """rows: (x, y, Ex, Ey, source); arrows normalized per source for legibility."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7.0, 4.0))
        colors = {"discrete": "tab:red", "uniform": "tab:blue"}
        for source in dict.fromkeys(r[4] for r in rows):
            arr = np.array([r[:4] for r in rows if r[4] == source], dtype=float)
            ax.quiver(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], color=colors.get(source, "k"),
                      angles="xy", alpha=0.7, label=source)
        ax.hlines(0, 0, 1, color="k", lw=2)
        ax.set_xlabel("x")
        ax.set_ylabel("distance to the needle")
        ax.set_aspect("equal", adjustable="datalim")
        ax.legend(loc="upper right")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
