"""On-disk artifacts of a run: CSV logs, JSON snapshots, the manifest and plot-ready series."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .crowd import intensity_to_csv
from .simulator import ExperimentResult
from .tessellation import CellAssignment, GroundGrid

METRIC_COLUMNS = ["t", "period", "estimated_coverage", "true_coverage", "disagreement", "mass"]
TRAJECTORY_COLUMNS = ["t", "uav", "x", "y", "z", "phi", "disagreement", "total_coverage"]
DEPLOYMENT_MAP_COLUMNS = ["kind", "row", "col", "x", "y", "altitude", "label", "intensity", "estimated_intensity"]
COVERAGE_TIMESERIES_COLUMNS = ["t", "estimated", "true"]
RATIO_TIMESERIES_COLUMNS = ["t", "estimated_ratio", "true_ratio"]
PLOT_KINDS = ("deployment-map", "coverage-timeseries", "ratio-timeseries", "trajectory")


class MissingArtifact(FileNotFoundError):
    pass


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return "" if value is None else value


def write_csv(path, rows: list[dict], columns: list[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifact(f"missing artifact {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise MissingArtifact(f"missing artifact {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def snapshot_name(t: int) -> str:
    return f"step_{t:04d}.json"


def write_run(result: ExperimentResult, out_dir, manifest: dict) -> dict[str, Path]:
    """Write every artifact of one run; returns the written paths by role."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": write_csv(out / "metrics.csv", result.metrics, METRIC_COLUMNS),
        "trajectory": write_csv(out / "trajectory.csv", result.trajectory, TRAJECTORY_COLUMNS),
    }
    for t, snap in sorted(result.snapshots.items()):
        write_json(out / "snapshots" / snapshot_name(t), snap)
    if result.sensors:
        paths["sensors"] = write_json(out / "sensors.json", [s.to_record() for s in result.sensors])
    for k, (true, est) in enumerate(zip(result.true_fields, result.estimated_fields)):
        intensity_to_csv(true, _mkparent(out / "intensity" / f"true_k{k}.csv"))
        intensity_to_csv(est, _mkparent(out / "intensity" / f"estimated_k{k}.csv"))
    final_labels = result.snapshots.get(result.scenario.n_steps, {}).get("labels")
    if final_labels is not None:
        CellAssignment(np.asarray(final_labels), result.scenario.n_uavs).to_csv(out / "cells_final.csv")
    manifest = dict(manifest)
    manifest["calibration"] = result.calibration
    manifest["artifacts"] = sorted(str(p.relative_to(out)) for p in out.rglob("*") if p.is_file())
    paths["manifest"] = write_json(out / "manifest.json", manifest)
    return paths


def _mkparent(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------- plot-ready series


def available_snapshots(run_dir) -> list[int]:
    folder = Path(run_dir) / "snapshots"
    return sorted(int(p.stem.split("_")[1]) for p in folder.glob("step_*.json"))


def load_snapshot(run_dir, t: int | None = None) -> dict:
    steps = available_snapshots(run_dir)
    if not steps:
        raise MissingArtifact(f"no snapshots under {Path(run_dir) / 'snapshots'}")
    t = steps[-1] if t is None else t
    if t not in steps:
        raise MissingArtifact(f"no snapshot for t = {t}; available: {steps}")
    return read_json(Path(run_dir) / "snapshots" / snapshot_name(t))


def deployment_map_rows(snapshot: dict) -> list[dict]:
    """One row per grid cell (kind=cell) followed by one row per UAV (kind=uav)."""
    grid = GroundGrid(**{**snapshot["grid"], "origin": tuple(snapshot["grid"]["origin"])})
    labels = np.asarray(snapshot["labels"])
    true = np.asarray(snapshot["true_intensity"])
    est = np.asarray(snapshot["estimated_intensity"])
    rows = []
    for idx, (x, y) in enumerate(grid.centers):
        row, col = divmod(idx, grid.nx)
        rows.append(
            {
                "kind": "cell",
                "row": row,
                "col": col,
                "x": x,
                "y": y,
                "label": labels[row, col],
                "intensity": true[row, col],
                "estimated_intensity": est[row, col],
            }
        )
    for i, (x, y, z) in enumerate(snapshot["positions"]):
        rows.append({"kind": "uav", "x": x, "y": y, "altitude": z, "label": i})
    return rows


def coverage_timeseries_rows(metrics: list[dict]) -> list[dict]:
    return [
        {"t": int(m["t"]), "estimated": float(m["estimated_coverage"]), "true": float(m["true_coverage"])}
        for m in metrics
    ]


def ratio_timeseries_rows(metrics: list[dict]) -> list[dict]:
    est0 = float(metrics[0]["estimated_coverage"])
    true0 = float(metrics[0]["true_coverage"])
    return [
        {
            "t": int(m["t"]),
            "estimated_ratio": float(m["estimated_coverage"]) / est0 if est0 else float("nan"),
            "true_ratio": float(m["true_coverage"]) / true0 if true0 else float("nan"),
        }
        for m in metrics
    ]
