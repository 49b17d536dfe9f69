"""YAML run configuration: parsing, validation, overrides and resolution to a Scenario."""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .channel import ChannelEnvironment
from .crowd import GpParams
from .presets import get_preset
from .simulator import Hotspot, Scenario

SCENARIO_FIELDS = {f.name: f for f in dataclasses.fields(Scenario)}
GP_FIELDS = {f.name for f in dataclasses.fields(GpParams)}
HOTSPOT_FIELDS = {f.name for f in dataclasses.fields(Hotspot)}
CHANNEL_FIELDS = {f.name for f in dataclasses.fields(ChannelEnvironment)} - {"name"}
TOP_LEVEL = ("preset", "seed", "seeds", "output_dir", "log_level", "figures", "scenario", "sweep")
SWEEP_FIELDS = {"parameter", "values", "baseline"}

# sweepable parameter names and the Scenario field each one drives
SWEEPABLE = {
    "theta_dB": "theta_db",
    "theta_db": "theta_db",
    "r_GS": "sensor_ratio",
    "r_gs": "sensor_ratio",
    "environment": "environment",
}


class ConfigError(ValueError):
    """Malformed configuration; ``where`` names the field or line."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


@dataclass
class RunConfig:
    preset: str | None = None
    seed: int = 0
    seeds: list[int] | None = None
    output_dir: str | None = None
    log_level: str = "INFO"
    figures: bool = True
    scenario: dict = field(default_factory=dict)
    sweep: dict | None = None

    @classmethod
    def from_dict(cls, data: dict | None) -> "RunConfig":
        data = {} if data is None else data
        if not isinstance(data, dict):
            raise ConfigError("top level must be a mapping")
        unknown = sorted(set(data) - set(TOP_LEVEL))
        if unknown:
            raise ConfigError(f"unknown key(s) {unknown}; allowed: {list(TOP_LEVEL)}", unknown[0])
        cfg = cls(**copy.deepcopy(data))
        cfg.scenario = cfg.scenario or {}
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = {
            "preset": self.preset,
            "seed": self.seed,
            "seeds": self.seeds,
            "output_dir": self.output_dir,
            "log_level": self.log_level,
            "figures": self.figures,
            "scenario": self.scenario,
            "sweep": self.sweep,
        }
        return {k: copy.deepcopy(v) for k, v in out.items() if v is not None}

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def validate(self) -> None:
        if self.preset is not None:
            try:
                get_preset(self.preset)
            except KeyError as exc:
                raise ConfigError(exc.args[0], "preset") from None
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("must be a non-negative integer", "seed")
        if self.seeds is not None:
            if not isinstance(self.seeds, list) or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
                raise ConfigError("must be a list of non-negative integers", "seeds")
        if not isinstance(self.scenario, dict):
            raise ConfigError("must be a mapping", "scenario")
        if self.sweep is not None:
            check_sweep(self.sweep)
        if self.preset is None and "n_uavs" not in self.scenario:
            raise ConfigError("required field missing (number of UAVs) when no preset is given", "scenario.n_uavs")
        # building the scenario surfaces type and range errors with field names
        self.resolve()

    def base_scenario(self) -> dict:
        base = get_preset(self.preset)["scenario"] if self.preset else {}
        merged = copy.deepcopy(base)
        merged.update(copy.deepcopy(self.scenario))
        return merged

    def resolve(self, seed: int | None = None) -> Scenario:
        data = self.base_scenario()
        data["seed"] = self.seed if seed is None else seed
        return scenario_from_dict(data)

    def sweep_spec(self) -> dict | None:
        if self.sweep is not None:
            return self.sweep
        if self.preset:
            return get_preset(self.preset).get("sweep")
        return None

    def seed_list(self) -> list[int]:
        return list(self.seeds) if self.seeds else [self.seed]


def check_sweep(sweep: dict) -> None:
    if not isinstance(sweep, dict):
        raise ConfigError("must be a mapping", "sweep")
    unknown = sorted(set(sweep) - SWEEP_FIELDS)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", "sweep")
    if sweep.get("parameter") not in SWEEPABLE:
        raise ConfigError(f"parameter must be one of {sorted(SWEEPABLE)}", "sweep.parameter")
    values = sweep.get("values")
    if not isinstance(values, list) or not values:
        raise ConfigError("must be a non-empty list", "sweep.values")


def _coerce(name: str, value: Any, kind):
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is int:
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"expected {kind.__name__}, got {value!r}", name) from None
    return value


_SCALAR_TYPES = {
    "n_uavs": int,
    "area_length": float,
    "grid_cells": int,
    "environment": str,
    "theta_db": float,
    "noise_dbm": float,
    "h_min": float,
    "h_max": float,
    "default_altitude": float,
    "initial": str,
    "sensing": str,
    "sensor_ratio": float,
    "observation_noise": float,
    "T": int,
    "K": int,
    "seed": int,
    "nu": float,
    "first_step_m": float,
    "perturbation": bool,
    "perturbation_scale": float,
    "anneal_perturbation": bool,
    "fixed_altitude": bool,
    "snapshots": str,
}
_OPTIONAL = {"field_seed": int, "a0": float, "push_gain": float}


def _pairs(name: str, value, width: int) -> tuple:
    if not isinstance(value, (list, tuple)):
        raise ConfigError("expected a list of coordinate lists", name)
    out = []
    for i, item in enumerate(value):
        if not isinstance(item, (list, tuple)) or len(item) != width:
            raise ConfigError(f"entry {i} must have {width} numbers", name)
        out.append(tuple(_coerce(f"{name}[{i}]", v, float) for v in item))
    return tuple(out)


def _hotspot(i: int, spec) -> Hotspot:
    where = f"scenario.hotspots[{i}]"
    if not isinstance(spec, dict):
        raise ConfigError("must be a mapping", where)
    unknown = sorted(set(spec) - HOTSPOT_FIELDS)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", where)
    for key in ("center", "semi_axes"):
        if key not in spec:
            raise ConfigError("required field missing", f"{where}.{key}")
    kwargs = {}
    for key in ("center", "semi_axes", "velocity"):
        if key in spec:
            kwargs[key] = _pairs(f"{where}.{key}", [spec[key]], 2)[0]
    if "multiplier" in spec:
        kwargs["multiplier"] = _coerce(f"{where}.multiplier", spec["multiplier"], float)
    if min(kwargs["semi_axes"]) <= 0:
        raise ConfigError("semi-axes must be > 0", f"{where}.semi_axes")
    return Hotspot(**kwargs)


def scenario_from_dict(data: dict) -> Scenario:
    """Build a Scenario from plain data, naming the offending field on error."""
    if not isinstance(data, dict):
        raise ConfigError("must be a mapping", "scenario")
    unknown = sorted(set(data) - set(SCENARIO_FIELDS))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", f"scenario.{unknown[0]}")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        where = f"scenario.{key}"
        if key in _SCALAR_TYPES:
            kwargs[key] = _coerce(where, value, _SCALAR_TYPES[key])
        elif key in _OPTIONAL:
            kwargs[key] = None if value is None else _coerce(where, value, _OPTIONAL[key])
        elif key == "gp":
            if not isinstance(value, dict) or set(value) - GP_FIELDS:
                raise ConfigError(f"must be a mapping with keys from {sorted(GP_FIELDS)}", where)
            kwargs[key] = GpParams(
                **{k: (None if v is None else _coerce(f"{where}.{k}", v, float)) for k, v in value.items()}
            )
        elif key == "channel":
            if not isinstance(value, dict) or set(value) - CHANNEL_FIELDS:
                raise ConfigError(f"must be a mapping with keys from {sorted(CHANNEL_FIELDS)}", where)
            kwargs[key] = {
                k: _coerce(f"{where}.{k}", v, int if k.startswith("m_") else float) for k, v in value.items()
            }
        elif key == "hotspots":
            if not isinstance(value, (list, tuple)):
                raise ConfigError("must be a list", where)
            kwargs[key] = tuple(_hotspot(i, h) for i, h in enumerate(value))
        elif key == "initial_positions":
            kwargs[key] = _pairs(where, value, 3)
        elif key == "sensor_positions":
            kwargs[key] = _pairs(where, value, 2)
    try:
        scenario = Scenario(**kwargs)
        scenario.env  # validates environment name and channel overrides
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc.args[0] if exc.args else exc), "scenario") from None
    return scenario


def scenario_to_dict(scenario: Scenario) -> dict:
    """Plain-data form of a Scenario, the inverse of :func:`scenario_from_dict`."""
    out: dict[str, Any] = {}
    for name in SCENARIO_FIELDS:
        value = getattr(scenario, name)
        if name == "gp":
            value = dataclasses.asdict(value)
        elif name == "hotspots":
            value = [
                {
                    "center": list(h.center),
                    "semi_axes": list(h.semi_axes),
                    "multiplier": h.multiplier,
                    "velocity": list(h.velocity),
                }
                for h in value
            ]
        elif name in ("initial_positions", "sensor_positions"):
            value = [list(p) for p in value]
        elif name == "channel":
            value = dict(value)
        out[name] = value
    return out


def scenario_hash(scenario: Scenario) -> str:
    canonical = json.dumps(scenario_to_dict(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_override(text: str) -> tuple[list[str], Any]:
    """``key=value`` with a dotted key; the value is parsed as YAML (numbers, lists, ...)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value", "--override")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key", "--override")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        value = raw
    path = key.split(".")
    if path[0] not in TOP_LEVEL:
        path = ["scenario", *path]
    return path, value


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    out = copy.deepcopy(data)
    for text in overrides:
        path, value = parse_override(text)
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError("cannot descend into a non-mapping", ".".join(path))
        node[path[-1]] = value
    return out


def load_config_text(text: str, overrides: list[str] | None = None) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else None
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", where) from None
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    return RunConfig.from_dict(apply_overrides(data, overrides or []))


def load_config(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    return load_config_text(Path(path).read_text(encoding="utf-8"), overrides)
