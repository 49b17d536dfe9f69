"""Matplotlib renderings of run artifacts, written to PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    return path


def deployment_map(snapshot: dict, path, title: str | None = None) -> Path:
    """True intensity as background, serving-cell borders and UAVs colored by altitude."""
    g = snapshot["grid"]
    x0, y0 = g["origin"]
    extent = (x0, x0 + g["nx"] * g["cell_size"], y0, y0 + g["ny"] * g["cell_size"])
    labels = np.asarray(snapshot["labels"])
    intensity = np.asarray(snapshot["true_intensity"])
    pos = np.asarray(snapshot["positions"])

    fig, ax = plt.subplots(figsize=(6.2, 5.2))
    im = ax.imshow(intensity, origin="lower", extent=extent, cmap="Greys", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="UE intensity")
    xs = x0 + (np.arange(g["nx"]) + 0.5) * g["cell_size"]
    ys = y0 + (np.arange(g["ny"]) + 0.5) * g["cell_size"]
    for i in np.unique(labels):
        ax.contour(xs, ys, (labels == i).astype(float), levels=[0.5], colors="tab:blue", linewidths=0.8)
    sc = ax.scatter(pos[:, 0], pos[:, 1], c=pos[:, 2], cmap="viridis", marker="^", s=70, edgecolors="k")
    fig.colorbar(sc, ax=ax, label="altitude [m]")
    for i, (x, y, _) in enumerate(pos):
        ax.annotate(str(i), (x, y), textcoords="offset points", xytext=(5, 5), fontsize=8)
    ax.set_xlim(extent[:2])
    ax.set_ylim(extent[2:])
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(title or f"deployment at t = {snapshot['t']}")
    return _save(fig, path)


def coverage_timeseries(rows: list[dict], path, period: int | None = None, title: str | None = None) -> Path:
    t = np.array([float(r["t"]) for r in rows])
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(t, [float(r["true"]) for r in rows], label="true intensity")
    ax.plot(t, [float(r["estimated"]) for r in rows], "--", label="estimated intensity")
    if period:
        for s in np.arange(period, t.max() + 1, period):
            ax.axvline(s, color="0.7", lw=0.8)
    ax.set_xlabel("step t")
    ax.set_ylabel("total coverage [UEs]")
    ax.legend()
    ax.set_title(title or "total coverage")
    return _save(fig, path)


def ratio_series(series: dict[str, list[tuple[int, float]]], path, title: str | None = None) -> Path:
    """Coverage ratio to t = 0, one line per swept value."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for label, points in series.items():
        t, r = zip(*points)
        ax.plot(t, r, label=label)
    ax.axhline(1.0, color="0.6", lw=0.8)
    ax.set_xlabel("step t")
    ax.set_ylabel("coverage / coverage at t = 0")
    ax.legend()
    ax.set_title(title or "coverage ratio")
    return _save(fig, path)


def sweep_summary(rows: list[dict], path, column: str = "mean_gain", title: str | None = None) -> Path:
    """Bar chart of per-value means with 95% confidence intervals."""
    labels = [str(r["value"]) for r in rows]
    mean = np.array([float(r[column]) for r in rows])
    lo = np.array([float(r[f"{column}_ci_low"]) for r in rows])
    hi = np.array([float(r[f"{column}_ci_high"]) for r in rows])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.bar(labels, mean, yerr=[(mean - lo).tolist(), (hi - mean).tolist()], capsize=4, color="tab:blue", alpha=0.8)
    ax.set_xlabel(str(rows[0]["parameter"]) if rows else "")
    ax.set_ylabel(column.replace("_", " "))
    ax.set_title(title or "sweep summary")
    return _save(fig, path)
