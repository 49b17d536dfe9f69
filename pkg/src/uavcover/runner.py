"""Single runs and parameter sweeps with their artifacts and figures."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__, plotting, records
from .config import SWEEPABLE, ConfigError, RunConfig, scenario_hash, scenario_to_dict
from .simulator import ExperimentResult, Scenario, run_experiment

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "UAVCOVER_OUTPUT_ROOT"
SWEEP_RUN_COLUMNS = [
    "parameter",
    "value",
    "seed",
    "initial_coverage",
    "final_coverage",
    "gain",
    "ratio_to_initial",
    "ratio_to_baseline",
]
SWEEP_SUMMARY_COLUMNS = [
    "parameter",
    "value",
    "n_seeds",
    "mean_gain",
    "mean_gain_ci_low",
    "mean_gain_ci_high",
    "mean_ratio_to_initial",
    "mean_ratio_to_initial_ci_low",
    "mean_ratio_to_initial_ci_high",
    "ratio_to_baseline",
    "ratio_to_baseline_ci_low",
    "ratio_to_baseline_ci_high",
]
SWEEP_SERIES_COLUMNS = ["parameter", "value", "seed", "t", "true_coverage", "ratio_to_initial"]


def default_output_dir(config: RunConfig, seed: int, suffix: str = "") -> Path:
    if config.output_dir:
        return Path(config.output_dir)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / f"{config.preset or 'custom'}{suffix}-seed{seed}"


def manifest_for(config: RunConfig, scenario: Scenario) -> dict:
    return {
        "package": "uavcover",
        "version": __version__,
        "seed": scenario.seed,
        "config_hash": scenario_hash(scenario),
        "preset": config.preset,
        "scenario": scenario_to_dict(scenario),
    }


def reproducible_config(scenario: Scenario) -> RunConfig:
    """A preset-free config that resolves to exactly ``scenario``."""
    data = scenario_to_dict(scenario)
    seed = data.pop("seed")
    return RunConfig(seed=seed, scenario=data)


def render_run(result: ExperimentResult, out_dir) -> list[Path]:
    fig_dir = Path(out_dir) / "figures"
    paths = []
    for t, snap in sorted(result.snapshots.items()):
        paths.append(plotting.deployment_map(snap, fig_dir / f"deployment_t{t:04d}.png"))
    rows = records.coverage_timeseries_rows(result.metrics)
    period = result.scenario.T if result.scenario.K > 1 else None
    paths.append(plotting.coverage_timeseries(rows, fig_dir / "coverage.png", period=period))
    return paths


def run_single(config: RunConfig, seed: int | None = None, out_dir=None, figures: bool | None = None):
    """Run one seeded experiment and write its artifacts; returns (result, out_dir)."""
    seed = config.seed if seed is None else seed
    scenario = config.resolve(seed)
    out = Path(out_dir) if out_dir is not None else default_output_dir(config, seed)
    log.info("running %s seed %d -> %s", config.preset or "custom scenario", seed, out)
    result = run_experiment(scenario)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(reproducible_config(scenario).to_yaml(), encoding="utf-8")
    records.write_run(result, out, manifest_for(config, scenario))
    if config.figures if figures is None else figures:
        render_run(result, out)
    return result, out


# ---------------------------------------------------------------- sweeps


def apply_sweep_value(scenario: Scenario, parameter: str, value) -> Scenario:
    if parameter not in SWEEPABLE:
        raise ConfigError(f"not sweepable; choose from {sorted(SWEEPABLE)}", "sweep.parameter")
    target = SWEEPABLE[parameter]
    if target == "sensor_ratio":
        return scenario.replace(sensing="sensors", sensor_ratio=float(value))
    if target == "theta_db":
        return scenario.replace(theta_db=float(value))
    return scenario.replace(environment=str(value))


def _run_metrics(scenario: Scenario) -> list[dict]:
    return run_experiment(scenario.replace(snapshots="none")).metrics


def normal_ci(values) -> tuple[float, float, float]:
    """Mean and 95% normal-approximation interval; degenerate for a single value."""
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, mean, mean
    half = 1.959963984540054 * float(arr.std(ddof=1)) / math.sqrt(arr.size)
    return mean, mean - half, mean + half


def sweep(
    config: RunConfig,
    parameter: str,
    values: list,
    seeds: list[int],
    out_dir=None,
    jobs: int = 1,
    baseline=None,
    figures: bool | None = None,
) -> dict:
    """Run every (value, seed) pair and aggregate gains per value.

    ``gain`` is final minus initial true coverage; ``ratio_to_baseline``
    divides by the mean gain of the ``baseline`` value when one is given.
    """
    if not values:
        raise ConfigError("at least one value is required", "sweep.values")
    if not seeds:
        raise ConfigError("at least one seed is required", "seeds")
    if parameter not in SWEEPABLE:
        raise ConfigError(f"not sweepable; choose from {sorted(SWEEPABLE)}", "sweep.parameter")
    keys = [(v, s) for v in values for s in seeds]
    scenarios = [apply_sweep_value(config.resolve(s), parameter, v) for v, s in keys]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_metrics, scenarios))
    else:
        outcomes = [_run_metrics(sc) for sc in scenarios]
    by_key = dict(zip(keys, outcomes))

    runs, series = [], []
    for v in values:
        for s in sorted(seeds):
            metrics = by_key[(v, s)]
            c0 = metrics[0]["true_coverage"]
            c1 = metrics[-1]["true_coverage"]
            runs.append(
                {
                    "parameter": parameter,
                    "value": v,
                    "seed": s,
                    "initial_coverage": c0,
                    "final_coverage": c1,
                    "gain": c1 - c0,
                    "ratio_to_initial": c1 / c0,
                }
            )
            for m in metrics:
                series.append(
                    {
                        "parameter": parameter,
                        "value": v,
                        "seed": s,
                        "t": m["t"],
                        "true_coverage": m["true_coverage"],
                        "ratio_to_initial": m["true_coverage"] / c0,
                    }
                )

    base_gain = None
    if baseline is not None:
        matches = [r["gain"] for r in runs if r["value"] == baseline]
        if not matches:
            raise ConfigError(f"baseline value {baseline!r} is not among the swept values", "sweep.baseline")
        base_gain = float(np.mean(matches))
        for r in runs:
            r["ratio_to_baseline"] = r["gain"] / base_gain

    summary = []
    for v in values:
        rows = [r for r in runs if r["value"] == v]
        g = normal_ci([r["gain"] for r in rows])
        q = normal_ci([r["ratio_to_initial"] for r in rows])
        row = {
            "parameter": parameter,
            "value": v,
            "n_seeds": len(rows),
            "mean_gain": g[0],
            "mean_gain_ci_low": g[1],
            "mean_gain_ci_high": g[2],
            "mean_ratio_to_initial": q[0],
            "mean_ratio_to_initial_ci_low": q[1],
            "mean_ratio_to_initial_ci_high": q[2],
        }
        if base_gain is not None:
            b = normal_ci([r["ratio_to_baseline"] for r in rows])
            row.update(ratio_to_baseline=b[0], ratio_to_baseline_ci_low=b[1], ratio_to_baseline_ci_high=b[2])
        summary.append(row)

    out = {"runs": runs, "summary": summary, "series": series}
    if out_dir is not None:
        write_sweep(out, config, parameter, values, seeds, baseline, Path(out_dir), figures)
    return out


def write_sweep(outcome: dict, config, parameter, values, seeds, baseline, out: Path, figures) -> None:
    out.mkdir(parents=True, exist_ok=True)
    records.write_csv(out / "sweep_runs.csv", outcome["runs"], SWEEP_RUN_COLUMNS)
    records.write_csv(out / "sweep_summary.csv", outcome["summary"], SWEEP_SUMMARY_COLUMNS)
    records.write_csv(out / "sweep_series.csv", outcome["series"], SWEEP_SERIES_COLUMNS)
    scenario = config.resolve(seeds[0])
    records.write_json(
        out / "manifest.json",
        {
            "package": "uavcover",
            "version": __version__,
            "preset": config.preset,
            "config_hash": scenario_hash(scenario),
            "scenario": scenario_to_dict(scenario),
            "sweep": {"parameter": parameter, "values": list(values), "baseline": baseline},
            "seeds": list(seeds),
        },
    )
    (out / "config.yaml").write_text(
        yaml.safe_dump(
            {**config.to_dict(), "seeds": list(seeds), "sweep": {"parameter": parameter, "values": list(values)}},
            sort_keys=False,
        ),
        encoding="utf-8",
    )
    if not (config.figures if figures is None else figures):
        return
    mean_series: dict[str, list[tuple[int, float]]] = {}
    for v in values:
        pts = [r for r in outcome["series"] if r["value"] == v]
        ts = sorted({r["t"] for r in pts})
        mean_series[f"{parameter} = {v}"] = [
            (t, float(np.mean([r["ratio_to_initial"] for r in pts if r["t"] == t]))) for t in ts
        ]
    plotting.ratio_series(mean_series, out / "figures" / "ratio_to_initial.png", title=f"mean ratio, {parameter} sweep")
    column = "ratio_to_baseline" if baseline is not None else "mean_gain"
    plotting.sweep_summary(outcome["summary"], out / "figures" / "sweep_summary.png", column=column)
