"""Command-line entry point: ``uavcover run | sweep | export-plotdata | validate-config | list-presets``."""

from __future__ import annotations

import argparse
import logging
import sys
import traceback
from pathlib import Path

import yaml

from . import plotting, records
from .channel import DegenerateGeometryError
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .crowd import EstimationError
from .presets import PRESETS
from .pushsum import NumericalFailure
from .runner import OUTPUT_ROOT_ENV, default_output_dir, run_single, sweep

log = logging.getLogger("uavcover")

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_MISSING = 4
NUMERICAL_ERRORS = (NumericalFailure, EstimationError, DegenerateGeometryError, FloatingPointError, RuntimeError)


def _seed_list(text: str) -> list[int]:
    """``"0-9"``, ``"1,4,7"`` or a mix of both."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def _value_list(text: str) -> list:
    return [yaml.safe_load(v) for v in text.split(",") if v.strip()]


def _load(args) -> RunConfig:
    overrides = list(args.override or [])
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"cannot read config file {path}")
        if args.preset:
            overrides.insert(0, f"preset={args.preset}")
        cfg = load_config(path, overrides)
    elif args.preset:
        cfg = RunConfig.from_dict(apply_overrides({"preset": args.preset}, overrides))
    else:
        raise ConfigError("give --config or --preset")
    if args.seed is not None:
        cfg = RunConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    return cfg


def _provenance(exc: BaseException) -> str:
    frames = traceback.extract_tb(exc.__traceback__)
    ours = [f for f in frames if "uavcover" in f.filename]
    where = ours[-1] if ours else (frames[-1] if frames else None)
    if where is None:
        return type(exc).__module__
    return f"{Path(where.filename).stem}.{where.name}"


def cmd_run(args) -> int:
    cfg = _load(args)
    logging.getLogger("uavcover").setLevel(args.log_level or cfg.log_level)
    for seed in cfg.seed_list() if args.seed is None else [cfg.seed]:
        out = Path(args.out) if args.out else default_output_dir(cfg, seed)
        if args.out and len(cfg.seed_list()) > 1 and args.seed is None:
            out = out / f"seed{seed}"
        result, out = run_single(cfg, seed, out, figures=not args.no_figures and cfg.figures)
        first, last = result.metrics[0]["true_coverage"], result.metrics[-1]["true_coverage"]
        print(f"seed {seed}: true coverage {first:.6g} -> {last:.6g} ({last / first:.3f}x); artifacts in {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    logging.getLogger("uavcover").setLevel(args.log_level or cfg.log_level)
    spec = cfg.sweep_spec() or {}
    parameter = args.parameter or spec.get("parameter")
    values = _value_list(args.values) if args.values is not None else spec.get("values")
    if not parameter:
        raise ConfigError("no sweep parameter; give --parameter or use a sweep preset", "sweep.parameter")
    if not values:
        raise ConfigError("empty value list", "sweep.values")
    seeds = _seed_list(args.seeds) if args.seeds else cfg.seed_list()
    baseline = args.baseline if args.baseline is not None else spec.get("baseline")
    if isinstance(baseline, str):
        baseline = yaml.safe_load(baseline)
    out = Path(args.out) if args.out else default_output_dir(cfg, seeds[0], suffix=f"-sweep-{parameter}")
    outcome = sweep(cfg, parameter, values, seeds, out, args.jobs, baseline, figures=not args.no_figures and cfg.figures)
    for row in outcome["summary"]:
        extra = f", vs baseline {row['ratio_to_baseline']:.3f}" if "ratio_to_baseline" in row else ""
        print(
            f"{parameter}={row['value']}: mean gain {row['mean_gain']:.6g} "
            f"[{row['mean_gain_ci_low']:.6g}, {row['mean_gain_ci_high']:.6g}], "
            f"ratio to t=0 {row['mean_ratio_to_initial']:.3f}{extra}"
        )
    print(f"sweep artifacts in {out}")
    return 0


def export_plotdata(run_dir, kind: str, t: int | None = None, figures: bool = True) -> Path:
    run_dir = Path(run_dir)
    if kind not in records.PLOT_KINDS:
        raise ConfigError(f"unknown figure kind {kind!r}; valid kinds: {', '.join(records.PLOT_KINDS)}")
    out_dir = run_dir / "plotdata"
    fig_dir = run_dir / "figures"
    if kind == "deployment-map":
        snap = records.load_snapshot(run_dir, t)
        path = records.write_csv(
            out_dir / f"deployment_map_t{snap['t']:04d}.csv",
            records.deployment_map_rows(snap),
            records.DEPLOYMENT_MAP_COLUMNS,
        )
        if figures:
            plotting.deployment_map(snap, fig_dir / f"deployment_t{snap['t']:04d}.png")
        return path
    metrics = records.read_csv(run_dir / "metrics.csv")
    if kind == "coverage-timeseries":
        rows = records.coverage_timeseries_rows(metrics)
        path = records.write_csv(out_dir / "coverage_timeseries.csv", rows, records.COVERAGE_TIMESERIES_COLUMNS)
        if figures:
            plotting.coverage_timeseries(rows, fig_dir / "coverage.png")
        return path
    if kind == "ratio-timeseries":
        rows = records.ratio_timeseries_rows(metrics)
        path = records.write_csv(out_dir / "ratio_timeseries.csv", rows, records.RATIO_TIMESERIES_COLUMNS)
        if figures:
            pts = [(int(r["t"]), r["true_ratio"]) for r in rows]
            plotting.ratio_series({"true intensity": pts}, fig_dir / "ratio.png")
        return path
    rows = records.read_csv(run_dir / "trajectory.csv")
    return records.write_csv(out_dir / "trajectory.csv", rows, ["t", "uav", "x", "y", "z"])


def cmd_export(args) -> int:
    path = export_plotdata(args.run_dir, args.kind, args.t, figures=not args.no_figures)
    print(path)
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    scenario = cfg.resolve()
    print(cfg.to_yaml(), end="")
    print(f"# resolves to {scenario.n_uavs} UAVs, {scenario.K} x {scenario.T} steps, environment {scenario.environment}")
    return 0


def cmd_list(args) -> int:
    for name, spec in PRESETS.items():
        sw = spec.get("sweep")
        tail = f"  [sweep {sw['parameter']}: {sw['values']}]" if sw else ""
        print(f"{name:24s} {spec['description']}{tail}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavcover",
        description="Distributed UAV base-station placement simulator.",
        epilog=f"Default output root: ${OUTPUT_ROOT_ENV} (else ./runs).",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def config_args(p):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--preset", choices=sorted(PRESETS), help="named experiment preset")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        p.add_argument(
            "--override",
            action="append",
            metavar="KEY=VALUE",
            help="dotted config override, e.g. theta_db=10 or scenario.gp.a0=5 (repeatable)",
        )
        p.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    p = sub.add_parser("run", help="run one experiment per seed and write artifacts")
    config_args(p)
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one parameter over values and seeds")
    config_args(p)
    p.add_argument("--parameter", help="theta_dB, r_GS or environment")
    p.add_argument("--values", help="comma-separated values")
    p.add_argument("--seeds", help="seed list, e.g. 0-9 or 1,3,5")
    p.add_argument("--baseline", help="value whose mean gain normalizes the ratio column")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-plotdata", help="write plot-ready series from a finished run")
    p.add_argument("run_dir")
    p.add_argument("kind", help=f"one of: {', '.join(records.PLOT_KINDS)}")
    p.add_argument("--t", type=int, help="step of the deployment map (default: last snapshot)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("validate-config", help="parse a configuration and print its normalized form")
    config_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("list-presets", help="list the named experiment presets")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.verbose:
        logging.getLogger("uavcover").setLevel(logging.DEBUG)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"uavcover {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except records.MissingArtifact as exc:
        print(f"uavcover {args.command}: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except NUMERICAL_ERRORS as exc:
        print(
            f"uavcover {args.command}: numerical failure in {_provenance(exc)}: {type(exc).__name__}: {exc}",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
