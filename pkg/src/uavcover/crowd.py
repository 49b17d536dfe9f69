"""Crowd-density estimation: Gaussian-process regression of the UE intensity field."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .channel import as_points
from .tessellation import GroundGrid


class EstimationError(RuntimeError):
    """Sensor covariance could not be factorized."""


@dataclass(frozen=True)
class GpParams:
    """Constant-mean GP prior with a squared-exponential kernel.

    ``a1`` is the squared length scale in m^2. ``jitter`` defaults to
    ``1e-8 * a0`` when left as None.
    """

    mu: float = 100.0
    a0: float = 10.0
    a1: float = 500.0**2
    jitter: float | None = None

    def __post_init__(self):
        if self.a0 <= 0 or self.a1 <= 0:
            raise ValueError("kernel amplitude and length scale must be > 0")
        if self.jitter is not None and self.jitter < 0:
            raise ValueError("jitter must be >= 0")

    @property
    def diag_jitter(self) -> float:
        return 1e-8 * self.a0 if self.jitter is None else self.jitter


@dataclass
class SensorNetwork:
    positions: np.ndarray  # (N, 2)
    observations: np.ndarray  # (N,)
    period: int = 0
    cells: np.ndarray | None = field(default=None, repr=False)  # flat grid index per sensor

    def __post_init__(self):
        self.positions = as_points(self.positions)
        self.observations = np.asarray(self.observations, dtype=float).ravel()
        if self.positions.shape[0] != self.observations.size:
            raise ValueError("positions and observations differ in length")

    def __len__(self):
        return self.observations.size

    def to_record(self) -> dict:
        return {
            "k": self.period,
            "positions": self.positions.tolist(),
            "observations": self.observations.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record())

    @classmethod
    def from_record(cls, record: dict) -> "SensorNetwork":
        return cls(record["positions"], record["observations"], period=int(record.get("k", 0)))


def kernel_matrix(p, q, params: GpParams) -> np.ndarray:
    p = as_points(p)
    q = as_points(q)
    sq = ((p[:, None, :] - q[None, :, :]) ** 2).sum(axis=-1)
    return params.a0 * np.exp(-sq / params.a1)


def kernel(p, q, params: GpParams) -> float:
    return float(kernel_matrix(p, q, params)[0, 0])


class GpPosterior:
    """Posterior of the intensity given one sensing snapshot.

    The sensor covariance is factorized once; predictions at any number of
    points reuse it.
    """

    def __init__(self, sensors: SensorNetwork, params: GpParams):
        if len(sensors) < 1:
            raise EstimationError("at least one sensor is required")
        self.sensors = sensors
        self.params = params
        k_g = kernel_matrix(sensors.positions, sensors.positions, params)
        k_g[np.diag_indices_from(k_g)] += params.diag_jitter
        try:
            self._factor = linalg.cho_factor(k_g, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            cond = np.linalg.cond(k_g)
            raise EstimationError(
                f"sensor covariance not positive definite (condition number {cond:.3e}); "
                "increase jitter or remove coincident sensors"
            ) from exc
        self._alpha = linalg.cho_solve(self._factor, sensors.observations - params.mu)

    def mean(self, points) -> np.ndarray:
        k_y = kernel_matrix(points, self.sensors.positions, self.params)
        return self.params.mu + k_y @ self._alpha

    def variance(self, points) -> np.ndarray:
        k_y = kernel_matrix(points, self.sensors.positions, self.params)
        v = linalg.cho_solve(self._factor, k_y.T)
        return self.params.a0 - np.einsum("pn,np->p", k_y, v)


def posterior_mean(y, sensors: SensorNetwork, params: GpParams):
    out = GpPosterior(sensors, params).mean(y)
    return float(out[0]) if np.ndim(y) == 1 else out


def estimate_field(sensors: SensorNetwork, grid: GroundGrid, params: GpParams) -> np.ndarray:
    """Posterior-mean intensity on every grid cell, clamped at zero, shape (ny, nx).

    Cells hosting a sensor take the sensed value: the prior is noise free,
    so this is the exact posterior mean there, and it sidesteps the jitter
    bias of a near-singular covariance when sensors are dense.
    """
    cells = sensors.cells
    if cells is None:
        cells = np.array([np.ravel_multi_index(grid.cell_of(p), grid.shape) for p in sensors.positions])
        at_center = np.all(np.isclose(grid.centers[cells], sensors.positions), axis=1)
        cells = np.where(at_center, cells, -1)
    values = np.full(grid.size, np.nan)
    hosted = cells[cells >= 0]
    values[hosted] = sensors.observations[cells >= 0]
    todo = np.isnan(values)
    if todo.any():
        values[todo] = GpPosterior(sensors, params).mean(grid.centers[todo])
    return np.clip(values, 0.0, None).reshape(grid.shape)


def intensity_to_csv(field_, path) -> None:
    """Write an intensity grid as ``row, col, value`` rows."""
    values = np.asarray(field_, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        for (row, col), value in np.ndenumerate(values):
            writer.writerow([row, col, repr(float(value))])


def intensity_from_csv(path, shape: tuple[int, int]) -> np.ndarray:
    out = np.full(shape, np.nan)
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out[int(rec["row"]), int(rec["col"])] = float(rec["value"])
    if np.isnan(out).any():
        raise ValueError(f"{path} does not cover every grid cell")
    return out
