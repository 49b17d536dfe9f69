"""Perturbed push-sum gradient ascent over the UAV neighbor graph.

Every UAV keeps its own copy of the whole 3U-dimensional deployment
(``u``), a push-sum numerator ``w``, the outgoing share ``xi`` and the
scalar weight ``phi``. One call to :func:`step` is one synchronous message
round: all nodes first publish ``(xi / d, phi / d)``, then fold what they
received and take a local gradient step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import as_deployment
from .tessellation import NeighborGraph

# (node, pseudo deployment of shape (U, 3)) -> local gradient of shape (U, 3)
GradientProvider = Callable[[int, np.ndarray], np.ndarray]

PHI_FLOOR = 1e-300


class NumericalFailure(RuntimeError):
    pass


@dataclass
class PushSumNodeState:
    u: np.ndarray
    w: np.ndarray
    xi: np.ndarray
    phi: float

    def copy(self) -> "PushSumNodeState":
        return PushSumNodeState(self.u.copy(), self.w.copy(), self.xi.copy(), self.phi)


@dataclass(frozen=True)
class StepSchedule:
    a0: float = 1.0
    nu: float = 0.55

    def __post_init__(self):
        if not 0.5 < self.nu < 1.0:
            raise ValueError("nu must lie in (1/2, 1)")
        if self.a0 <= 0:
            raise ValueError("a0 must be > 0")

    def __call__(self, t: int) -> float:
        return step_size(t, self)


def step_size(t: int, schedule: StepSchedule) -> float:
    if t < 0:
        raise ValueError("t must be >= 0")
    return schedule.a0 * (t + 1) ** (-schedule.nu)


@dataclass(frozen=True)
class PerturbationConfig:
    enabled: bool = True
    scale: float = 1.0
    anneal: bool = False  # additionally multiply draws by a(t)

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("perturbation scale must be >= 0")


@dataclass(frozen=True)
class ConstraintBox:
    """Flight box ``[0, L]^2 x [h_min, h_max]`` shared by every UAV."""

    lower: tuple[float, float, float]
    upper: tuple[float, float, float]
    push_gain: float = 1.0

    def __post_init__(self):
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("empty constraint box")
        if self.push_gain <= 0:
            raise ValueError("push_gain must be > 0")

    @classmethod
    def from_area(cls, length: float, h_min: float, h_max: float, push_gain: float = 1.0):
        return cls((0.0, 0.0, h_min), (length, length, h_max), push_gain)

    def contains(self, deployment) -> bool:
        pos = as_deployment(deployment)
        return bool(np.all(pos >= self.lower) and np.all(pos <= self.upper))

    def project(self, deployment) -> np.ndarray:
        return np.clip(as_deployment(deployment), self.lower, self.upper)


def init_states(deployment) -> list[PushSumNodeState]:
    """Every node starts from the true initial positions with unit weight."""
    flat = as_deployment(deployment).ravel()
    return [PushSumNodeState(flat.copy(), flat.copy(), flat.copy(), 1.0) for _ in range(flat.size // 3)]


def extended_gradient(
    node: int, pseudo: np.ndarray, box: ConstraintBox, gradient_provider: GradientProvider
) -> np.ndarray:
    """Local gradient inside the feasible box, a push of size J back toward it outside."""
    pos = np.asarray(pseudo, dtype=float).reshape(-1, 3)
    if box.contains(pos):
        return np.asarray(gradient_provider(node, pos), dtype=float).ravel()
    toward = (box.project(pos) - pos).ravel()
    return box.push_gain * toward / np.linalg.norm(toward)


def step(
    states: list[PushSumNodeState],
    graph: NeighborGraph,
    t: int,
    schedule: StepSchedule,
    perturb: PerturbationConfig,
    box: ConstraintBox,
    rng: np.random.Generator,
    gradient_provider: GradientProvider,
    axis_mask=None,
) -> tuple[list[PushSumNodeState], np.ndarray]:
    """One synchronous push-sum round; returns new states and actual UAV positions.

    ``axis_mask`` (length 3) zeroes gradient and noise on frozen axes, e.g.
    ``(1, 1, 0)`` for a fixed-altitude fleet.
    """
    n = len(states)
    degrees = graph.degrees
    # phase 1: immutable outgoing messages
    outbox = [(s.xi / degrees[j], s.phi / degrees[j]) for j, s in enumerate(states)]
    # noise is drawn up front in node order so results do not depend on evaluation order
    dim = states[0].xi.size
    if perturb.enabled and perturb.scale > 0:
        kappa = perturb.scale * rng.standard_normal((n, dim))
        if perturb.anneal:
            kappa *= step_size(t + 1, schedule)
    else:
        kappa = np.zeros((n, dim))
    mask = None if axis_mask is None else np.tile(np.asarray(axis_mask, dtype=float), dim // 3)
    a = step_size(t + 1, schedule)

    new_states = []
    for i in range(n):
        nbrs = graph.neighbors(i)
        w = np.sum([outbox[j][0] for j in nbrs], axis=0)
        phi = float(sum(outbox[j][1] for j in nbrs))
        if not phi > PHI_FLOOR:
            raise NumericalFailure(f"push-sum weight of node {i} underflowed ({phi!r})")
        u = w / phi
        direction = extended_gradient(i, u, box, gradient_provider) + kappa[i]
        if mask is not None:
            direction = direction * mask
        new_states.append(PushSumNodeState(u=u, w=w, xi=w + a * direction, phi=phi))

    actual = np.array([s.u.reshape(-1, 3)[i] for i, s in enumerate(new_states)])
    return new_states, box.project(actual)


def calibrate_step_size(
    initial_gradients: np.ndarray, graph: NeighborGraph, nu: float, first_move: float
) -> float:
    """Initial step size ``a0`` such that the first UAV movement is ``first_move`` meters.

    Starting from a common initialization nothing moves in round 0; in round 1
    UAV ``i`` moves by ``a(1) * sum_j f_j / d_j / phi_i(2)`` (its own block),
    with ``f_j`` the nodes' initial local gradients, shape (U, 3U).
    """
    deg = graph.degrees.astype(float)
    adj = graph.adjacency.astype(float)
    phi1 = adj @ (1.0 / deg)
    phi2 = adj @ (phi1 / deg)
    mixed = adj @ (np.asarray(initial_gradients, dtype=float) / deg[:, None]) / phi2[:, None]
    n = graph.n_nodes
    own = np.array([mixed[i].reshape(-1, 3)[i] for i in range(n)])
    sup = float(np.abs(own).max()) * 2.0 ** (-nu)
    return first_move / sup if sup > 0 else 1.0


def consensus_diagnostics(states: list[PushSumNodeState]) -> dict:
    """Max pairwise sup-norm disagreement of pseudo positions and total weight."""
    us = np.array([s.u for s in states])
    spread = float(np.max(us.max(axis=0) - us.min(axis=0))) if len(states) > 1 else 0.0
    return {"disagreement": spread, "mass": float(sum(s.phi for s in states))}
