"""The four figure kinds rendered from run artifacts.

Rendering is read-only with respect to the run directory and produces
fixed-size raster images.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy.stats import gaussian_kde

from .artifacts import ArtifactError, RunArtifacts
from .densities import contour_density, simulate_predator_prey

CONTOUR_GRID = 100
DPI = 120

FIGURE_KINDS = ("scatter_contours", "marginals", "metric_curves", "lv_predictive")


def render(run_dir, kind: str, out_path, snapshots="first,last", dims=(0, 1),
           fixed=None) -> Path:
    """Render one figure kind for a run; returns the written path."""
    run = RunArtifacts(run_dir)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if kind == "scatter_contours":
        fig = _scatter_contours(run, snapshots, dims, fixed)
    elif kind == "marginals":
        fig = _marginals(run)
    elif kind == "metric_curves":
        fig = _metric_curves(run)
    elif kind == "lv_predictive":
        fig = _lv_predictive(run)
    else:
        raise ArtifactError(f"unknown figure kind {kind!r}; choose from {FIGURE_KINDS}")
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    return out_path


def _slice_density(density, grid_x, grid_y, dims, fixed, dim):
    """Evaluate the overlay density on a 2D slice of the full space."""
    xx, yy = np.meshgrid(grid_x, grid_y, indexing="ij")
    pts = np.empty(xx.shape + (dim,))
    pts[...] = np.asarray(fixed)
    pts[..., dims[0]] = xx
    pts[..., dims[1]] = yy
    return xx, yy, density(pts)


def _scatter_contours(run, snapshots, dims, fixed):
    bounds = run.mesh_bounds
    dim = len(bounds)
    dims = tuple(dims)
    if any(k >= dim for k in dims):
        raise ArtifactError(f"slice dims {dims} out of range for a {dim}-d run")
    if fixed is None:
        fixed = [0.5 * (lo + hi) for lo, hi in bounds]
    picks = run.select_snapshots(snapshots)

    fig, axes = plt.subplots(1, len(picks), figsize=(4.2 * len(picks), 4.0),
                             squeeze=False)
    density = contour_density(run.target_id, run.target_params) if dim == 2 else None
    gx = np.linspace(*bounds[dims[0]], CONTOUR_GRID)
    gy = np.linspace(*bounds[dims[1]], CONTOUR_GRID)
    overlay = _slice_density(density, gx, gy, dims, fixed, dim) if density else None

    for ax, (iteration, pos) in zip(axes[0], picks):
        if overlay is not None:
            xx, yy, zz = overlay
            ax.contour(xx, yy, zz, levels=8, colors="deeppink", linewidths=0.8,
                       alpha=0.8)
        ax.scatter(pos[:, dims[0]], pos[:, dims[1]], s=6, c="tab:blue", alpha=0.7)
        ax.set_xlim(bounds[dims[0]])
        ax.set_ylim(bounds[dims[1]])
        ax.set_xlabel(f"x{dims[0]}")
        ax.set_ylabel(f"x{dims[1]}")
        ax.set_title(f"iteration {iteration}")
    fig.suptitle(run.target_id)
    fig.tight_layout()
    return fig


def _marginals(run):
    _, final = run.select_snapshots("last")[0]
    bounds = run.mesh_bounds
    dim = final.shape[1]
    fig, axes = plt.subplots(1, dim, figsize=(3.6 * dim, 3.2), squeeze=False)
    for k, ax in enumerate(axes[0]):
        xk = final[:, k]
        ax.hist(xk, bins=30, density=True, color="tab:blue", alpha=0.55,
                label="histogram")
        if np.ptp(xk) > 0 and len(xk) > 1:
            grid = np.linspace(*bounds[k], 200)
            ax.plot(grid, gaussian_kde(xk)(grid), color="crimson", lw=1.5, label="kde")
        ax.set_xlabel(f"x{k}")
        if k == 0:
            ax.legend(fontsize=8)
    fig.suptitle(f"{run.target_id}: final-particle marginals")
    fig.tight_layout()
    return fig


def _metric_curves(run):
    rows = run.metrics()
    if not rows:
        raise ArtifactError("metrics.jsonl is empty")
    required = {"iteration", "cumulative_runtime_s"}
    missing = required - set(rows[0])
    if missing:
        raise ArtifactError(f"metrics.jsonl lacks column(s) {sorted(missing)}")
    t = np.array([r["cumulative_runtime_s"] for r in rows])
    series = [(name, np.array([r.get(name) if r.get(name) is not None else np.nan
                               for r in rows], dtype=float))
              for name in ("avg_nll", "mmd2")]
    series = [(name, vals) for name, vals in series if np.isfinite(vals).any()]
    if not series:
        raise ArtifactError("metrics.jsonl has no finite metric values to plot")

    fig, axes = plt.subplots(1, len(series), figsize=(4.6 * len(series), 3.4),
                             squeeze=False)
    for ax, (name, vals) in zip(axes[0], series):
        ok = np.isfinite(vals)
        ax.plot(t[ok], vals[ok], marker="o", ms=3)
        ax.set_xlabel("cumulative runtime (s)")
        ax.set_ylabel(name)
    fig.suptitle(f"{run.target_id}: metrics over runtime")
    fig.tight_layout()
    return fig


def _lv_predictive(run):
    if run.target_id != "lotka-volterra":
        raise ArtifactError("the predictive figure requires a lotka-volterra run")
    data = run.dataset()
    for col in ("year", "hare", "lynx"):
        if col not in data:
            raise ArtifactError(f"dataset.csv lacks column {col!r}")
    params = run.target_params
    x0 = float(params.get("x0", 33.956))
    y0 = float(params.get("y0", 5.933))
    years = data["year"]
    t_end = float(years[-1] - years[0])

    _, final = run.select_snapshots("last")[0]
    bounds = np.array(run.mesh_bounds)
    inside = ((final >= bounds[:, 0]) & (final <= bounds[:, 1])).all(axis=1)
    kept = final[inside] if inside.any() else final

    fig, axes = plt.subplots(1, 2, figsize=(10, 3.8))
    subsample = kept[:: max(1, len(kept) // 60)]
    for theta in subsample:
        ts, xs, ys = simulate_predator_prey(theta, x0, y0, t_end, dt=0.05)
        axes[0].plot(years[0] + ts, xs, color="skyblue", alpha=0.25, lw=0.6)
        axes[0].plot(years[0] + ts, ys, color="pink", alpha=0.25, lw=0.6)
    for ax, theta, label in ((axes[0], kept.mean(axis=0), "posterior mean"),
                             (axes[1], _mode_estimate(kept), "posterior mode")):
        ts, xs, ys = simulate_predator_prey(theta, x0, y0, t_end, dt=0.05)
        ax.plot(years[0] + ts, xs, color="tab:blue", lw=1.6,
                label=f"hare ({label})")
        ax.plot(years[0] + ts, ys, color="crimson", lw=1.6,
                label=f"lynx ({label})")
        ax.plot(years, data["hare"], "o", color="tab:blue", ms=4, mfc="none",
                label="observed hare")
        ax.plot(years, data["lynx"], "s", color="crimson", ms=4, mfc="none",
                label="observed lynx")
        ax.set_xlabel("year")
        ax.set_ylabel("pelts (thousands)")
        ax.legend(fontsize=7)
    fig.suptitle("posterior-predictive trajectories")
    fig.tight_layout()
    return fig


def _mode_estimate(samples):
    """Per-dimension KDE peak; falls back to the median on degenerate axes."""
    mode = np.empty(samples.shape[1])
    for k in range(samples.shape[1]):
        xk = samples[:, k]
        if np.ptp(xk) > 0 and len(xk) > 1:
            grid = np.linspace(xk.min(), xk.max(), 256)
            mode[k] = grid[np.argmax(gaussian_kde(xk)(grid))]
        else:
            mode[k] = np.median(xk)
    return mode
