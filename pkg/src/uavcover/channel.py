"""Air-to-ground channel model.

Geometry helpers, the elevation-angle LoS law, the distance path loss and
Nakagami-m fading used by every other module. All functions broadcast over
numpy arrays so callers can evaluate whole grids at once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

RAD_TO_DEG = 180.0 / math.pi


class DegenerateGeometryError(ValueError):
    """Raised when a UAV sits exactly on a ground point (zero distance)."""


class LinkCondition(enum.Enum):
    LOS = "LoS"
    NLOS = "NLoS"


class GroundPoint(NamedTuple):
    x: float
    y: float


class UavPosition(NamedTuple):
    x: float
    y: float
    altitude: float


# (b0, b1) pairs of the sigmoid LoS law per propagation environment
ENVIRONMENT_PRESETS = {
    "suburban": (0.43, 4.88),
    "urban": (0.16, 9.61),
    "dense-urban": (0.11, 12.08),
}


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class ChannelEnvironment:
    """Propagation constants for one scenario class.

    ``sigma`` is the noise power relative to a unit transmit power and
    ``theta_threshold`` the linear SINR threshold.
    """

    b0: float
    b1: float
    alpha_los: float = 2.0
    alpha_nlos: float = 3.0
    beta_los: float = 0.092
    beta_nlos: float = 0.035
    epsilon0: float = 1.0
    m_los: int = 3
    m_nlos: int = 2
    sigma: float = 1e-7
    theta_threshold: float = 1.0
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if self.alpha_los < 2 or self.alpha_nlos < 2:
            raise ValueError("path-loss exponents must be >= 2")
        for attr in ("beta_los", "beta_nlos", "epsilon0", "theta_threshold"):
            if not getattr(self, attr) > 0:
                raise ValueError(f"{attr} must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        for attr in ("m_los", "m_nlos"):
            m = getattr(self, attr)
            if int(m) != m or m < 1:
                raise ValueError(f"{attr} must be an integer >= 1")
            object.__setattr__(self, attr, int(m))

    @classmethod
    def preset(cls, name: str, **overrides) -> "ChannelEnvironment":
        try:
            b0, b1 = ENVIRONMENT_PRESETS[name]
        except KeyError:
            raise ValueError(
                f"unknown environment {name!r}; choose from {sorted(ENVIRONMENT_PRESETS)}"
            ) from None
        return cls(b0=b0, b1=b1, name=name, **overrides)

    def with_theta_db(self, theta_db: float) -> "ChannelEnvironment":
        return replace(self, theta_threshold=float(db_to_linear(theta_db)))

    def alpha(self, cond: LinkCondition) -> float:
        return self.alpha_los if cond is LinkCondition.LOS else self.alpha_nlos

    def beta(self, cond: LinkCondition) -> float:
        return self.beta_los if cond is LinkCondition.LOS else self.beta_nlos

    def m(self, cond: LinkCondition) -> int:
        return self.m_los if cond is LinkCondition.LOS else self.m_nlos


def as_deployment(deployment) -> np.ndarray:
    """Coerce a UAV deployment to a float array of shape (U, 3)."""
    arr = np.asarray(deployment, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 3) if arr.size == 3 else arr.reshape(-1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 1:
        raise ValueError(f"deployment must have shape (U, 3), got {arr.shape}")
    return arr


def as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"ground points must have shape (P, 2), got {arr.shape}")
    return arr


class LinkGeometry(NamedTuple):
    """Pairwise UAV/ground-point geometry, every field shaped (U, P)."""

    ex: np.ndarray  # UAV x minus point x
    ey: np.ndarray
    h: np.ndarray
    r: np.ndarray  # horizontal offset
    d: np.ndarray  # 3D distance
    theta: np.ndarray  # elevation angle, radians


def link_geometry(deployment, points) -> LinkGeometry:
    uav = as_deployment(deployment)
    pts = as_points(points)
    ex = uav[:, 0:1] - pts[None, :, 0]
    ey = uav[:, 1:2] - pts[None, :, 1]
    h = np.broadcast_to(uav[:, 2:3], ex.shape)
    r = np.hypot(ex, ey)
    d = np.sqrt(r * r + h * h)
    if np.any(d == 0):
        raise DegenerateGeometryError("UAV at zero altitude directly over a ground point")
    theta = np.arcsin(np.clip(h / d, -1.0, 1.0))
    return LinkGeometry(ex, ey, h, r, d, theta)


def elevation_angle(uav, ue) -> float:
    """Elevation angle in radians from ground point ``ue`` up to ``uav``."""
    x, y, alt = (float(v) for v in uav)
    if alt < 0:
        raise ValueError("altitude must be >= 0")
    dist = math.sqrt((x - ue[0]) ** 2 + (y - ue[1]) ** 2 + alt**2)
    if dist == 0:
        raise DegenerateGeometryError("UAV at zero altitude directly over the UE")
    return math.asin(min(1.0, alt / dist))


def los_probability(theta, env: ChannelEnvironment):
    """Sigmoid LoS probability of an elevation angle given in radians."""
    theta = np.asarray(theta, dtype=float)
    p = 1.0 / (1.0 + env.b1 * np.exp(-env.b0 * (RAD_TO_DEG * theta - env.b1)))
    return p if p.ndim else float(p)


def nlos_probability(theta, env: ChannelEnvironment):
    return 1.0 - los_probability(theta, env)


def los_probability_slope(p_los, env: ChannelEnvironment):
    """Derivative of the LoS probability w.r.t. the angle, given P(LoS)."""
    return env.b0 * RAD_TO_DEG * p_los * (1.0 - p_los)


def path_loss(d, cond: LinkCondition, env: ChannelEnvironment):
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be >= 0")
    out = env.beta(cond) * (env.epsilon0 + d) ** (-env.alpha(cond))
    return out if out.ndim else float(out)


def mean_signal_power_grid(deployment, points, env: ChannelEnvironment) -> np.ndarray:
    """Average received power S for every (UAV, point) pair, shape (U, P)."""
    geo = link_geometry(deployment, points)
    p_los = los_probability(geo.theta, env)
    los = path_loss(geo.d, LinkCondition.LOS, env)
    nlos = path_loss(geo.d, LinkCondition.NLOS, env)
    return p_los * los + (1.0 - p_los) * nlos


def mean_signal_power(uav, ue, env: ChannelEnvironment) -> float:
    return float(mean_signal_power_grid([tuple(uav)], [tuple(ue)], env)[0, 0])


def sample_fading(cond: LinkCondition, env: ChannelEnvironment, rng: np.random.Generator, size=None):
    """Normalized gamma (Nakagami-m power) gain with unit mean."""
    m = env.m(cond)
    return rng.gamma(shape=m, scale=1.0 / m, size=size)
