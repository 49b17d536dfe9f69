"""Coverage probability approximation, its gradients and the total-coverage objective.

The coverage probability of a UE served by UAV ``i`` is approximated with the
gamma-tail bound ``P(h > x) ~ 1 - (1 - exp(-eta x))**m`` and the closed-form
Laplace transform of the interference, which makes it an alternating
binomial sum of Laplace-transform evaluations. Gradients are analytic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    ChannelEnvironment,
    LinkCondition,
    as_deployment,
    as_points,
    link_geometry,
    los_probability,
    los_probability_slope,
    path_loss,
)
from .tessellation import CellAssignment, GroundGrid

_CONDS = (LinkCondition.LOS, LinkCondition.NLOS)


def gamma_tail_constant(m: int) -> float:
    """``m * (m!) ** (-1/m)``, the exponent scale of the gamma tail bound."""
    return m * math.factorial(m) ** (-1.0 / m)


@dataclass(frozen=True)
class CoverageParams:
    env: ChannelEnvironment

    @property
    def eta_los(self) -> float:
        return gamma_tail_constant(self.env.m_los)

    @property
    def eta_nlos(self) -> float:
        return gamma_tail_constant(self.env.m_nlos)

    def eta(self, cond: LinkCondition) -> float:
        return self.eta_los if cond is LinkCondition.LOS else self.eta_nlos


def _as_params(params) -> CoverageParams:
    return params if isinstance(params, CoverageParams) else CoverageParams(params)


class _Links:
    """Per-link channel quantities shared by the value and gradient passes."""

    def __init__(self, uav: np.ndarray, pts: np.ndarray, env: ChannelEnvironment, grad: bool):
        geo = link_geometry(uav, pts)
        self.d = geo.d
        p_los = los_probability(geo.theta, env)
        self.prob = {LinkCondition.LOS: p_los, LinkCondition.NLOS: 1.0 - p_los}
        self.ell = {q: path_loss(geo.d, q, env) for q in _CONDS}
        if not grad:
            return
        self.dell = {q: -env.alpha(q) * self.ell[q] / (env.epsilon0 + geo.d) for q in _CONDS}
        # unit vectors / angle derivatives w.r.t. the UAV coordinates, shape (U, P, 3)
        self.dd = np.stack([geo.ex, geo.ey, geo.h], axis=-1) / geo.d[..., None]
        r = geo.r
        safe_r = np.where(r > 0, r, 1.0)
        cx = np.where(r > 0, geo.ex / safe_r, 0.0)
        cy = np.where(r > 0, geo.ey / safe_r, 0.0)
        d2 = geo.d**2
        dtheta = np.stack([-geo.h * cx / d2, -geo.h * cy / d2, r / d2], axis=-1)
        self.dp_los = los_probability_slope(p_los, env)[..., None] * dtheta


def _serving_coverage(uav, serving, pts, params: CoverageParams, grad: bool):
    """Coverage of every point in ``pts`` served by ``serving``.

    Returns ``(values (P,), gradient (P, U, 3) or None)``; values are not clamped.
    """
    env = params.env
    n_uav = uav.shape[0]
    n_pts = pts.shape[0]
    links = _Links(uav, pts, env, grad)
    others = np.array([j for j in range(n_uav) if j != serving], dtype=int)
    p_o = {q: links.prob[q][others] for q in _CONDS}
    ell_o = {q: links.ell[q][others] for q in _CONDS}

    value = np.zeros(n_pts)
    gradient = np.zeros((n_pts, n_uav, 3)) if grad else None
    for q0 in _CONDS:
        m0 = env.m(q0)
        p_serv = links.prob[q0][serving]
        gamma = params.eta(q0) * env.theta_threshold / links.ell[q0][serving]
        inner = np.zeros(n_pts)
        if grad:
            d_inner_dgamma = np.zeros(n_pts)
            d_inner_others = np.zeros((others.size, n_pts, 3))
        for k in range(1, m0 + 1):
            s = k * gamma
            base = {q: 1.0 + s * ell_o[q] / env.m(q) for q in _CONDS}
            g = {q: base[q] ** (-env.m(q)) for q in _CONDS}
            mix = sum(p_o[q] * g[q] for q in _CONDS)  # per-interferer Laplace factor
            laplace = np.prod(mix, axis=0) if others.size else np.ones(n_pts)
            term = (-1) ** (k + 1) * math.comb(m0, k) * np.exp(-k * env.sigma * gamma) * laplace
            inner += term
            if not grad:
                continue
            # d(mix)/ds and d(mix)/d(u_j)
            dmix_ds = -sum(p_o[q] * ell_o[q] * base[q] ** (-env.m(q) - 1) for q in _CONDS)
            log_slope = (dmix_ds / mix).sum(axis=0) if others.size else 0.0
            d_inner_dgamma += term * k * (log_slope - env.sigma)
            if others.size:
                dg_dd = {
                    q: -(base[q] ** (-env.m(q) - 1)) * s * links.dell[q][others] for q in _CONDS
                }
                dmix_du = links.dp_los[others] * (g[LinkCondition.LOS] - g[LinkCondition.NLOS])[
                    ..., None
                ] + (sum(p_o[q] * dg_dd[q] for q in _CONDS))[..., None] * links.dd[others]
                d_inner_others += term[None, :, None] * dmix_du / mix[..., None]
        value += p_serv * inner
        if grad:
            sign = 1.0 if q0 is LinkCondition.LOS else -1.0
            dgamma = (gamma * env.alpha(q0) / (env.epsilon0 + links.d[serving]))[:, None] * links.dd[
                serving
            ]
            gradient[:, serving, :] += (
                sign * links.dp_los[serving] * inner[:, None]
                + (p_serv * d_inner_dgamma)[:, None] * dgamma
            )
            if others.size:
                gradient[:, others, :] += np.transpose(
                    p_serv[None, :, None] * d_inner_others, (1, 0, 2)
                )
    return value, gradient


def interference_laplace(deployment, serving: int, ue, s: float, params) -> float:
    """Laplace transform of the aggregate interference seen at ``ue``, evaluated at ``s``."""
    if s < 0:
        raise ValueError("s must be >= 0")
    params = _as_params(params)
    env = params.env
    uav = as_deployment(deployment)
    others = [j for j in range(uav.shape[0]) if j != serving]
    if not others:
        return 1.0
    links = _Links(uav[others], as_points(ue), env, grad=False)
    mix = sum(
        links.prob[q] * (1.0 + s * links.ell[q] / env.m(q)) ** (-env.m(q)) for q in _CONDS
    )
    return float(np.prod(mix))


def coverage_probability(deployment, serving: int, ue, params, clamp: bool = True) -> float:
    params = _as_params(params)
    value, _ = _serving_coverage(as_deployment(deployment), serving, as_points(ue), params, False)
    v = float(value[0])
    return min(1.0, max(0.0, v)) if clamp else v


def coverage_gradient(deployment, serving: int, ue, params) -> np.ndarray:
    """d(coverage)/d(u_j) for all UAVs j, shape (U, 3)."""
    params = _as_params(params)
    _, grad = _serving_coverage(as_deployment(deployment), serving, as_points(ue), params, True)
    return grad[0]


def coverage_map(deployment, assignment: CellAssignment, grid: GroundGrid, params) -> np.ndarray:
    """Coverage probability of each grid cell under its own serving UAV, shape (ny, nx)."""
    params = _as_params(params)
    uav = as_deployment(deployment)
    labels = assignment.labels.ravel()
    out = np.zeros(labels.size)
    for i in range(uav.shape[0]):
        mask = labels == i
        if mask.any():
            out[mask], _ = _serving_coverage(uav, i, grid.centers[mask], params, False)
    return np.clip(out, 0.0, 1.0).reshape(grid.shape)


def local_gradient_f(
    deployment, uav: int, assignment: CellAssignment, intensity, grid: GroundGrid, params
) -> np.ndarray:
    """Gradient of UAV ``uav``'s own-cell coverage integral, shape (U, 3).

    Midpoint quadrature over the grid cells labeled ``uav``; zero when the
    UAV owns no cell.
    """
    params = _as_params(params)
    pos = as_deployment(deployment)
    lam = np.asarray(intensity, dtype=float).ravel()
    mask = assignment.mask(uav) & (lam != 0)
    if not mask.any():
        return np.zeros_like(pos)
    _, grad = _serving_coverage(pos, uav, grid.centers[mask], params, True)
    weights = lam[mask] * grid.cell_area
    return np.einsum("p,puk->uk", weights, grad)


def total_coverage(deployment, assignment: CellAssignment, intensity, grid: GroundGrid, params) -> float:
    """Expected number of covered UEs: sum over cells of coverage x intensity x area."""
    cov = coverage_map(deployment, assignment, grid, params)
    lam = np.asarray(intensity, dtype=float).reshape(grid.shape)
    return float(np.sum(cov * lam) * grid.cell_area)
