"""Scenario construction, the sensing/optimization loop and evaluation metrics."""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import linalg

from .channel import (
    ChannelEnvironment,
    LinkCondition,
    as_deployment,
    as_points,
    db_to_linear,
    link_geometry,
    los_probability,
    path_loss,
)
from .coverage import CoverageParams, coverage_map, local_gradient_f, total_coverage
from .crowd import GpParams, SensorNetwork, estimate_field, kernel_matrix
from .pushsum import (
    ConstraintBox,
    PerturbationConfig,
    StepSchedule,
    calibrate_step_size,
    consensus_diagnostics,
    init_states,
    step,
)
from .tessellation import GroundGrid, assign_cells, neighbor_graph

log = logging.getLogger(__name__)

INITIAL_KINDS = ("uniform-lattice", "centered", "explicit")
SENSING_MODES = ("true", "sensors")


@dataclass(frozen=True)
class Hotspot:
    """Axis-aligned elliptical region whose intensity is overwritten by ``multiplier * mu``."""

    center: tuple[float, float]
    semi_axes: tuple[float, float]
    multiplier: float = 10.0
    velocity: tuple[float, float] = (0.0, 0.0)  # displacement per sensing period

    def center_at(self, k: int) -> tuple[float, float]:
        return (self.center[0] + k * self.velocity[0], self.center[1] + k * self.velocity[1])


@dataclass(frozen=True)
class Scenario:
    n_uavs: int = 9
    area_length: float = 5000.0
    grid_cells: int = 50
    environment: str = "urban"
    channel: dict = field(default_factory=dict)  # ChannelEnvironment field overrides
    theta_db: float = 0.0
    noise_dbm: float = -70.0
    gp: GpParams = field(default_factory=GpParams)
    h_min: float = 10.0
    h_max: float = 1500.0
    default_altitude: float = 200.0
    initial: str = "uniform-lattice"
    initial_positions: tuple = ()
    hotspots: tuple[Hotspot, ...] = ()
    sensing: str = "true"
    sensor_ratio: float = 1.0
    sensor_positions: tuple = ()
    observation_noise: float = 0.0
    T: int = 60
    K: int = 1
    seed: int = 0
    field_seed: int | None = None
    # optimizer knobs
    nu: float = 0.55
    a0: float | None = None
    first_step_m: float = 50.0
    push_gain: float | None = None
    perturbation: bool = True
    perturbation_scale: float = 1.0
    anneal_perturbation: bool = False
    fixed_altitude: bool = False
    snapshots: str = "auto"  # auto | all | none

    def __post_init__(self):
        if self.n_uavs < 1:
            raise ValueError("n_uavs must be >= 1")
        if self.initial not in INITIAL_KINDS:
            raise ValueError(f"initial must be one of {INITIAL_KINDS}")
        if self.sensing not in SENSING_MODES:
            raise ValueError(f"sensing must be one of {SENSING_MODES}")
        if not 0.0 <= self.sensor_ratio <= 1.0:
            raise ValueError("sensor_ratio must lie in [0, 1]")
        if self.T < 0 or self.K < 1:
            raise ValueError("need T >= 0 and K >= 1")
        if not 0 <= self.h_min <= self.h_max:
            raise ValueError("need 0 <= h_min <= h_max")
        if self.snapshots not in ("auto", "all", "none"):
            raise ValueError("snapshots must be auto, all or none")

    @property
    def grid(self) -> GroundGrid:
        return GroundGrid.square(self.area_length, self.grid_cells)

    @property
    def env(self) -> ChannelEnvironment:
        overrides = dict(self.channel)
        overrides.setdefault("sigma", float(db_to_linear(self.noise_dbm)))
        overrides.setdefault("theta_threshold", float(db_to_linear(self.theta_db)))
        return ChannelEnvironment.preset(self.environment, **overrides)

    @property
    def params(self) -> CoverageParams:
        return CoverageParams(self.env)

    def box(self, push_gain: float = 1.0) -> ConstraintBox:
        return ConstraintBox.from_area(self.area_length, self.h_min, self.h_max, push_gain)

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    @property
    def n_steps(self) -> int:
        return self.T * self.K

    def period_of(self, t: int) -> int:
        return 0 if self.T == 0 else min(t // self.T, self.K - 1)


# ---------------------------------------------------------------- fields


@functools.lru_cache(maxsize=4)
def _prior_factor(grid: GroundGrid, gp: GpParams) -> np.ndarray:
    cov = kernel_matrix(grid.centers, grid.centers, gp)
    # the dense grid covariance is numerically singular; never sample with less than the default jitter
    cov[np.diag_indices_from(cov)] += max(gp.diag_jitter, 1e-8 * gp.a0)
    try:
        return linalg.cholesky(cov, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise RuntimeError("field covariance factorization failed; use a larger GP jitter") from exc


def generate_true_intensity(grid: GroundGrid, gp: GpParams, seed) -> np.ndarray:
    """One draw of the GP prior over the grid centers, clamped at zero."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sample = gp.mu + _prior_factor(grid, gp) @ rng.standard_normal(grid.size)
    return np.clip(sample, 0.0, None).reshape(grid.shape)


def hotspot_mask(grid: GroundGrid, hotspot: Hotspot, k: int = 0) -> np.ndarray:
    cx, cy = hotspot.center_at(k)
    a, b = hotspot.semi_axes
    pts = grid.centers
    inside = ((pts[:, 0] - cx) / a) ** 2 + ((pts[:, 1] - cy) / b) ** 2 <= 1.0
    return inside.reshape(grid.shape)


def apply_hotspots(field_, grid: GroundGrid, hotspots, k: int, mu: float) -> np.ndarray:
    """Overwrite each (period-``k`` translated) ellipse with ``multiplier * mu``."""
    out = np.array(field_, dtype=float, copy=True).reshape(grid.shape)
    x_lo, x_hi, y_lo, y_hi = grid.extent
    for spot in hotspots:
        cx, cy = spot.center_at(k)
        a, b = spot.semi_axes
        if cx + a < x_lo or cx - a > x_hi or cy + b < y_lo or cy - b > y_hi:
            log.warning("hotspot centered at (%.0f, %.0f) lies outside the area", cx, cy)
        out[hotspot_mask(grid, spot, k)] = spot.multiplier * mu
    return out


def place_sensors(grid: GroundGrid, ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Flat indices of the grid cells that host a ground sensor (at least one)."""
    count = max(1, int(round(ratio * grid.size)))
    if count >= grid.size:
        return np.arange(grid.size)
    return np.sort(rng.choice(grid.size, size=count, replace=False))


def sense(field_, grid: GroundGrid, cells, k: int = 0, noise: float = 0.0, rng=None) -> SensorNetwork:
    """Sensors report the intensity of the cell they sit in (optionally noisy)."""
    cells = np.asarray(cells, dtype=int)
    obs = np.asarray(field_, dtype=float).ravel()[cells]
    if noise > 0:
        obs = np.clip(obs + noise * rng.standard_normal(obs.size), 0.0, None)
    return SensorNetwork(grid.centers[cells], obs, period=k, cells=cells)


# ---------------------------------------------------------------- oracles


def monte_carlo_coverage(deployment, serving: int, ue, params, samples: int, rng) -> float:
    """Empirical P(SINR > threshold) by sampling link states and Nakagami gains."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    env = params.env if isinstance(params, CoverageParams) else params
    uav = as_deployment(deployment)
    geo = link_geometry(uav, as_points(ue))
    d = geo.d[:, 0]
    p_los = los_probability(geo.theta[:, 0], env)
    ell = {q: path_loss(d, q, env) for q in LinkCondition}
    hits = 0
    batch = 50_000
    for start in range(0, samples, batch):
        n = min(batch, samples - start)
        los = rng.random((n, uav.shape[0])) < p_los
        m = np.where(los, env.m_los, env.m_nlos)
        power = rng.gamma(m, 1.0 / m) * np.where(los, ell[LinkCondition.LOS], ell[LinkCondition.NLOS])
        signal = power[:, serving]
        interference = power.sum(axis=1) - signal
        hits += int(np.count_nonzero(signal > env.theta_threshold * (interference + env.sigma)))
    return hits / samples


def true_total_coverage(
    deployment, true_field, grid: GroundGrid, params, mode: str = "analytic", samples: int = 10_000, rng=None
) -> float:
    """Expected covered UEs under the true intensity.

    ``mode="monte-carlo"`` replaces the analytic coverage probability of each
    cell with :func:`monte_carlo_coverage` (slow).
    """
    params = params if isinstance(params, CoverageParams) else CoverageParams(params)
    assignment = assign_cells(deployment, grid, params.env)
    if mode == "analytic":
        return total_coverage(deployment, assignment, true_field, grid, params)
    if mode != "monte-carlo":
        raise ValueError("mode must be 'analytic' or 'monte-carlo'")
    rng = rng if rng is not None else np.random.default_rng(0)
    lam = np.asarray(true_field, dtype=float).ravel()
    labels = assignment.labels.ravel()
    acc = 0.0
    for idx in range(grid.size):
        if lam[idx] == 0:
            continue
        cov = monte_carlo_coverage(deployment, int(labels[idx]), grid.centers[idx], params, samples, rng)
        acc += cov * lam[idx]
    return acc * grid.cell_area


# ---------------------------------------------------------------- experiment


def initial_deployment(scenario: Scenario) -> np.ndarray:
    n = scenario.n_uavs
    L = scenario.area_length
    alt = scenario.default_altitude
    if scenario.initial == "explicit":
        pos = as_deployment(scenario.initial_positions)
        if pos.shape[0] != n:
            raise ValueError(f"expected {n} initial positions, got {pos.shape[0]}")
        return pos
    if scenario.initial == "uniform-lattice":
        side = math.ceil(math.sqrt(n))
        idx = np.arange(n)
        x = (idx % side + 0.5) * L / side
        y = (idx // side + 0.5) * L / side
        return np.column_stack([x, y, np.full(n, alt)])
    # centered: sunflower spiral inside a 100 m disc around the area center
    idx = np.arange(n)
    radius = 100.0 * np.sqrt((idx + 0.5) / n)
    angle = idx * math.pi * (3.0 - math.sqrt(5.0))
    return np.column_stack(
        [L / 2 + radius * np.cos(angle), L / 2 + radius * np.sin(angle), np.full(n, alt)]
    )


@dataclass
class ExperimentResult:
    scenario: Scenario
    metrics: list[dict]
    trajectory: list[dict]
    snapshots: dict[int, dict]
    final_deployment: np.ndarray
    true_fields: list[np.ndarray]
    estimated_fields: list[np.ndarray]
    sensors: list[SensorNetwork]
    calibration: dict

    def series(self, key: str) -> np.ndarray:
        return np.array([row[key] for row in self.metrics])


def _snapshot_steps(scenario: Scenario) -> set[int]:
    last = scenario.n_steps
    if scenario.snapshots == "none":
        return set()
    if scenario.snapshots == "all":
        return set(range(last + 1))
    steps = {0, last}
    for k in range(1, scenario.K + 1):
        steps.update({k * scenario.T - 1, k * scenario.T})
    return {s for s in steps if 0 <= s <= last}


def run_experiment(scenario: Scenario) -> ExperimentResult:
    """Sense, estimate and run ``T`` push-sum steps per period for ``K`` periods."""
    grid = scenario.grid
    params = scenario.params
    env = params.env
    root = np.random.SeedSequence(scenario.seed)
    field_ss, sensor_ss, noise_ss, obs_ss = root.spawn(4)
    if scenario.field_seed is not None:
        field_ss = np.random.SeedSequence(scenario.field_seed)
    noise_rng = np.random.default_rng(noise_ss)
    obs_rng = np.random.default_rng(obs_ss)

    base = generate_true_intensity(grid, scenario.gp, np.random.default_rng(field_ss))
    true_fields = [apply_hotspots(base, grid, scenario.hotspots, k, scenario.gp.mu) for k in range(scenario.K)]
    sensors: list[SensorNetwork] = []
    if scenario.sensing == "true":
        estimated = [f.copy() for f in true_fields]
    else:
        if scenario.sensor_positions:
            cells = np.array(
                [np.ravel_multi_index(grid.cell_of(p), grid.shape) for p in scenario.sensor_positions]
            )
        else:
            cells = place_sensors(grid, scenario.sensor_ratio, np.random.default_rng(sensor_ss))
        estimated = []
        for k, f in enumerate(true_fields):
            net = sense(f, grid, cells, k, scenario.observation_noise, obs_rng)
            sensors.append(net)
            estimated.append(estimate_field(net, grid, scenario.gp))

    deployment = initial_deployment(scenario)
    n = scenario.n_uavs
    axis_mask = (1.0, 1.0, 0.0) if scenario.fixed_altitude else None

    def provider_for(lam):
        def provider(node, pseudo):
            cells_ = assign_cells(pseudo, grid, env)
            return local_gradient_f(pseudo, node, cells_, lam, grid, params)

        return provider

    # step-size and push-gain calibration from the initial local gradients
    assignment = assign_cells(deployment, grid, env)
    f0 = np.array(
        [local_gradient_f(deployment, i, assignment, estimated[0], grid, params).ravel() for i in range(n)]
    )
    sup = float(np.abs(f0).max())
    if scenario.a0 is not None:
        a0 = scenario.a0
    else:
        a0 = calibrate_step_size(f0, neighbor_graph(assignment), scenario.nu, scenario.first_step_m)
    norms = np.linalg.norm(f0, axis=1)
    p95 = float(np.percentile(norms, 95))
    push_gain = scenario.push_gain if scenario.push_gain is not None else (10.0 * p95 if p95 > 0 else 1.0)
    schedule = StepSchedule(a0=a0, nu=scenario.nu)
    perturb = PerturbationConfig(scenario.perturbation, scenario.perturbation_scale, scenario.anneal_perturbation)
    box = scenario.box(push_gain)

    states = init_states(deployment)
    snap_steps = _snapshot_steps(scenario)
    metrics, trajectory, snapshots = [], [], {}

    def record(t, deployment, assignment):
        k = scenario.period_of(t)
        est = total_coverage(deployment, assignment, estimated[k], grid, params)
        true = total_coverage(deployment, assignment, true_fields[k], grid, params)
        diag = consensus_diagnostics(states)
        metrics.append(
            {
                "t": t,
                "period": k,
                "estimated_coverage": est,
                "true_coverage": true,
                "disagreement": diag["disagreement"],
                "mass": diag["mass"],
            }
        )
        for i, (x, y, z) in enumerate(deployment):
            trajectory.append(
                {
                    "t": t,
                    "uav": i,
                    "x": x,
                    "y": y,
                    "z": z,
                    "phi": states[i].phi,
                    "disagreement": diag["disagreement"],
                    "total_coverage": true,
                }
            )
        if t in snap_steps:
            snapshots[t] = {
                "t": t,
                "period": k,
                "positions": deployment.tolist(),
                "labels": assignment.labels.tolist(),
                "true_intensity": true_fields[k].tolist(),
                "estimated_intensity": estimated[k].tolist(),
                "grid": asdict(grid),
            }

    record(0, deployment, assignment)
    for t in range(scenario.n_steps):
        k = scenario.period_of(t)
        graph = neighbor_graph(assignment)
        states, deployment = step(
            states,
            graph,
            t,
            schedule,
            perturb,
            box,
            noise_rng,
            provider_for(estimated[k]),
            axis_mask=axis_mask,
        )
        assignment = assign_cells(deployment, grid, env)
        record(t + 1, deployment, assignment)
        if (t + 1) % 10 == 0:
            log.debug("t=%d true coverage %.4g", t + 1, metrics[-1]["true_coverage"])

    return ExperimentResult(
        scenario=scenario,
        metrics=metrics,
        trajectory=trajectory,
        snapshots=snapshots,
        final_deployment=deployment,
        true_fields=true_fields,
        estimated_fields=estimated,
        sensors=sensors,
        calibration={"a0": a0, "push_gain": push_gain, "initial_sup_gradient": sup},
    )
