"""Deterministic rendering of the five figure kinds.

Analytic curves draw as lines, Monte Carlo estimates as markers with error
bars.  Styles and fonts are pinned and timestamps stripped so identical
inputs give byte-identical PNG and SVG files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spec import FigureError, FigureSpec, group_series, read_cdf_rows, read_curve_rows

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "svg.hashsalt": "coexfigs",
    "savefig.bbox": "tight",
}

_COLORS = plt.cm.tab10.colors


def _finish(fig, ax, spec: FigureSpec, out_dir: str) -> list[str]:
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)
    if spec.title:
        ax.set_title(spec.title)
    out = []
    base = Path(out_dir) / spec.out_name
    base.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(f"{base}.png", metadata={"Software": "coexfigs"})
    fig.savefig(f"{base}.svg", metadata={"Date": None})
    plt.close(fig)
    return [f"{base}.png", f"{base}.svg"]


def _color_for(label: str, palette: dict):
    if label not in palette:
        palette[label] = _COLORS[len(palette) % len(_COLORS)]
    return palette[label]


def _plot_metric(spec: FigureSpec, metric: str, xlabel: str, ylabel: str,
                 out_dir: str, x_scale=1.0):
    rows = read_curve_rows(spec.csv_paths)
    series = group_series(rows, metric, spec.side)
    fig, ax = plt.subplots()
    palette: dict = {}
    for (scenario, engine, side), samples in sorted(series.items()):
        x = np.array([s[0] for s in samples]) * x_scale
        y = np.array([s[1] for s in samples])
        err = [s[2] for s in samples]
        label = scenario if spec.side else f"{scenario} [{side}]"
        color = _color_for(label, palette)
        if engine == "monte-carlo":
            yerr = np.array([e if e is not None else 0.0 for e in err])
            ax.errorbar(x, y, yerr=yerr, fmt="o", ms=3.5, capsize=2,
                        color=color, label=f"{label} (sim)")
        else:
            ax.plot(x, y, color=color, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7, loc="best")
    return _finish(fig, ax, spec, out_dir)


def render_coverage_curves(spec: FigureSpec, out_dir: str):
    return _plot_metric(spec, "sinr_coverage", "SINR threshold (dB)", "coverage probability", out_dir)


def render_dst_panel(spec: FigureSpec, out_dir: str):
    # DST plotted per km^2 for readable magnitudes
    return _plot_metric(
        spec, "dst", "SINR threshold (dB)", "successful links per km$^2$", out_dir,
    )


def render_rate_panel(spec: FigureSpec, out_dir: str):
    return _plot_metric(
        spec, "rate_coverage", "rate threshold (Mbit/s)", "rate coverage probability",
        out_dir, x_scale=1e-6,
    )


def render_map_surface(spec: FigureSpec, out_dir: str):
    """Access probabilities as an annotated scenario-by-side matrix."""
    rows = read_curve_rows(spec.csv_paths)
    series = group_series(rows, "map", None)
    scenarios = sorted({k[0] for k in series})
    sides = sorted({k[2] for k in series})
    grid = np.full((len(scenarios), len(sides)), np.nan)
    for (scenario, engine, side), samples in series.items():
        if engine != "analytic" and not np.isnan(grid[scenarios.index(scenario), sides.index(side)]):
            continue
        grid[scenarios.index(scenario), sides.index(side)] = samples[0][1]
    fig, ax = plt.subplots()
    im = ax.imshow(grid, vmin=0.0, vmax=1.0, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(sides)), sides)
    ax.set_yticks(range(len(scenarios)), scenarios)
    for i in range(len(scenarios)):
        for j in range(len(sides)):
            if not np.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                        color="white" if grid[i, j] < 0.6 else "black", fontsize=8)
    fig.colorbar(im, ax=ax, label="medium access probability")
    ax.grid(False)
    return _finish(fig, ax, spec, out_dir)


def render_cdf_pair(spec: FigureSpec, out_dir: str):
    """Total vs strongest interference CDFs, one panel per eNB intensity."""
    rows = read_cdf_rows(spec.csv_paths)
    lambdas = sorted({r[0] for r in rows})
    fig, axes = plt.subplots(1, max(len(lambdas), 1), figsize=(6.4, 3.2), sharey=True)
    if len(lambdas) == 1:
        axes = [axes]
    for ax, lam in zip(axes, lambdas):
        for kind, style in (("total", "-"), ("strongest", "--")):
            pts = sorted((r[2], r[3]) for r in rows if r[0] == lam and r[1] == kind)
            if not pts:
                raise FigureError(f"missing {kind!r} CDF for lambda_l={lam}")
            ax.plot([p[0] for p in pts], [p[1] for p in pts], style, label=kind)
        ax.axvline(-62.0, color="gray", lw=0.8, ls=":")
        ax.set_xlabel("interference (dBm)")
        ax.set_title(f"{lam:g} eNBs/km$^2$", fontsize=9)
        ax.legend(fontsize=7, loc="lower right")
    axes[0].set_ylabel("empirical CDF")
    if spec.xlim:
        for ax in axes:
            ax.set_xlim(*spec.xlim)
    out = []
    base = Path(out_dir) / spec.out_name
    base.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(f"{base}.png", metadata={"Software": "coexfigs"})
    fig.savefig(f"{base}.svg", metadata={"Date": None})
    plt.close(fig)
    return [f"{base}.png", f"{base}.svg"]


_RENDERERS = {
    "map-surface": render_map_surface,
    "coverage-curves": render_coverage_curves,
    "dst-panel": render_dst_panel,
    "rate-panel": render_rate_panel,
    "cdf-pair": render_cdf_pair,
}


def render(spec: FigureSpec, out_dir: str) -> list[str]:
    """Render one figure to PNG and SVG; returns the written paths.

    Raises FigureError before creating any file when inputs are missing or
    malformed.
    """
    with plt.rc_context(_STYLE):
        return _RENDERERS[spec.kind](spec, out_dir)
