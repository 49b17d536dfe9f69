"""Named experiment presets, one per figure group of the evaluation."""

from __future__ import annotations

import copy

# three elliptical hotspots placed between the initial lattice positions
STATIC_HOTSPOTS = [
    {"center": [1700.0, 3500.0], "semi_axes": [450.0, 300.0]},
    {"center": [3600.0, 3300.0], "semi_axes": [300.0, 450.0]},
    {"center": [2600.0, 1300.0], "semi_axes": [500.0, 300.0]},
]

MOVING_HOTSPOTS = [
    {"center": [1700.0, 3500.0], "semi_axes": [450.0, 300.0], "velocity": [400.0, 0.0]},
    {"center": [3600.0, 3300.0], "semi_axes": [300.0, 450.0], "velocity": [0.0, -400.0]},
    {"center": [2600.0, 1300.0], "semi_axes": [500.0, 300.0], "velocity": [-300.0, 300.0]},
]

REFERENCE_SEEDS = list(range(10))

PRESETS: dict[str, dict] = {
    "fig3-urban-static": {
        "description": "urban, uniform lattice start, true intensity with hotspots, 60 steps",
        "scenario": {"hotspots": STATIC_HOTSPOTS, "T": 60, "K": 1},
    },
    "fig4-altitude-ablation": {
        "description": "fig3 scenario with altitudes frozen at the default altitude",
        "scenario": {"hotspots": STATIC_HOTSPOTS, "T": 60, "K": 1, "fixed_altitude": True},
    },
    "fig5-environments": {
        "description": "fig3 scenario across suburban, urban and dense-urban channels",
        "scenario": {"hotspots": STATIC_HOTSPOTS, "T": 60, "K": 1},
        "sweep": {"parameter": "environment", "values": ["suburban", "urban", "dense-urban"]},
    },
    "fig6-theta-sweep": {
        "description": "fig3 scenario for SINR thresholds of -5, 0 and 10 dB",
        "scenario": {"hotspots": STATIC_HOTSPOTS, "T": 60, "K": 1},
        "sweep": {"parameter": "theta_db", "values": [-5.0, 0.0, 10.0]},
    },
    "fig8-centered-start": {
        "description": "all UAVs start clustered at the area center, 100 steps",
        "scenario": {"hotspots": STATIC_HOTSPOTS, "T": 100, "K": 1, "initial": "centered"},
    },
    "fig9-sensor-ratio": {
        "description": "GP-estimated intensity from randomly placed ground sensors, 30 steps",
        "scenario": {
            "hotspots": STATIC_HOTSPOTS,
            "T": 30,
            "K": 1,
            "sensing": "sensors",
            "sensor_ratio": 0.03,
            "field_seed": 2020,
        },
        "sweep": {"parameter": "r_gs", "values": [0.01, 0.03, 0.1, 1.0], "baseline": 1.0},
    },
    "fig10-dynamic-hotspots": {
        "description": "hotspots move at every sensing time, T = 30, K = 4",
        "scenario": {"hotspots": MOVING_HOTSPOTS, "T": 30, "K": 4},
    },
}


def get_preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
