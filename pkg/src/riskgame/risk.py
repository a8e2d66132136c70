"""Relative kinematics, time-to-collision and the minimax risk matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import HorizonMismatch
from .geometry import Pose2, Trajectory, Velocity2


@dataclass(frozen=True)
class RiskParams:
    """Constants of the TTC guard/clamp and the joint exponential risk.

    ``epsilon`` guards the TTC denominator and ``ttc_clamp_sigma`` caps TTC.
    ``tau_risk`` and ``sigma_risk`` are the TTC and distance decay constants.
    """

    epsilon: float = 1e-3
    ttc_clamp_sigma: float = 8.0
    tau_risk: float = 2.0
    sigma_risk: float = 8.0

    def __post_init__(self):
        for name in ("epsilon", "ttc_clamp_sigma", "tau_risk", "sigma_risk"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True, eq=False)
class AgentPrediction:
    """Predicted motion modes (each a Trajectory) for one agent plus its detection score."""

    modes: tuple[Trajectory, ...]
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ValueError("an agent needs at least one motion mode")


@dataclass(frozen=True, eq=False)
class RiskTensor:
    """Instantaneous risk indexed [plan, agent, mode, step]."""

    values: np.ndarray


@dataclass(frozen=True, eq=False)
class RiskMatrix:
    values: np.ndarray
    confidence_applied: bool = True

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def relative_kinematics(
    ego: tuple[Pose2, Velocity2], agent: tuple[Pose2, Velocity2]
) -> tuple[np.ndarray, np.ndarray, float]:
    (ego_pose, ego_vel), (agent_pose, agent_vel) = ego, agent
    p_rel = np.array([agent_pose.x - ego_pose.x, agent_pose.y - ego_pose.y])
    v_rel = np.array([agent_vel.vx - ego_vel.vx, agent_vel.vy - ego_vel.vy])
    return p_rel, v_rel, float(np.hypot(*p_rel))


def closing_speed(p_rel, v_rel):
    """Rate at which the gap shrinks, floored at zero; zero for coincident positions.

    Works elementwise on arrays with a trailing xy axis.
    """
    p_rel = np.asarray(p_rel, dtype=float)
    v_rel = np.asarray(v_rel, dtype=float)
    dot = np.sum(p_rel * v_rel, axis=-1)
    norm = np.hypot(p_rel[..., 0], p_rel[..., 1])
    safe = np.where(norm > 0, norm, 1.0)
    speed = np.where(norm > 0, np.maximum(0.0, -dot / safe), 0.0)
    return speed


def ttc(p_rel, v_rel, distance, params: RiskParams = RiskParams()):
    """Clamped time-to-collision, in [0, params.ttc_clamp_sigma].

    Scalar inputs give a float; arrays with a trailing xy axis broadcast.
    """
    speed = closing_speed(p_rel, v_rel)
    out = np.minimum(np.asarray(distance, dtype=float) / (speed + params.epsilon), params.ttc_clamp_sigma)
    return float(out) if np.ndim(out) == 0 else out


def instantaneous_risk(ttc_value, distance, params: RiskParams = RiskParams()):
    out = np.exp(-np.asarray(ttc_value, dtype=float) / params.tau_risk) * np.exp(
        -np.asarray(distance, dtype=float) / params.sigma_risk
    )
    return float(out) if np.ndim(out) == 0 else out


def _check_horizon(trajs: Sequence[Trajectory], horizon: int, dt: float, what: str):
    for i, tr in enumerate(trajs):
        if len(tr) != horizon:
            raise HorizonMismatch(f"{what}[{i}] has {len(tr)} samples, expected {horizon}")
        if tr.dt != dt:
            raise HorizonMismatch(f"{what}[{i}] has dt={tr.dt}, expected {dt}")


def build_risk_tensor(
    plans: Sequence[Trajectory],
    agents: Sequence[AgentPrediction],
    params: RiskParams = RiskParams(),
) -> RiskTensor:
    """Risk between every plan and every agent mode at every step.

    All trajectories must share dt and length. Agents must share the
    number of modes A. Result has shape (P, K, A, T).
    """
    if not plans:
        raise ValueError("need at least one plan")
    horizon, dt = len(plans[0]), plans[0].dt
    _check_horizon(plans, horizon, dt, "plans")
    n_modes = {len(a.modes) for a in agents}
    if len(n_modes) > 1:
        raise ValueError(f"agents disagree on mode count: {sorted(n_modes)}")
    n_modes = n_modes.pop() if n_modes else 1
    for k, agent in enumerate(agents):
        _check_horizon(agent.modes, horizon, dt, f"agents[{k}].modes")

    P, K = len(plans), len(agents)
    if K == 0:
        return RiskTensor(np.zeros((P, 0, n_modes, horizon)))

    ego_p = np.stack([tr.positions for tr in plans])[:, None, None]  # P,1,1,T,2
    ego_v = np.stack([tr.velocities for tr in plans])[:, None, None]
    ag_p = np.stack([[m.positions for m in a.modes] for a in agents])[None]  # 1,K,A,T,2
    ag_v = np.stack([[m.velocities for m in a.modes] for a in agents])[None]

    p_rel = ag_p - ego_p
    v_rel = ag_v - ego_v
    dist = np.hypot(p_rel[..., 0], p_rel[..., 1])
    values = instantaneous_risk(ttc(p_rel, v_rel, dist, params), dist, params)
    return RiskTensor(values)


def minimax_reduce(tensor: RiskTensor, confidences: Sequence[float]) -> RiskMatrix:
    """Worst case over modes and steps, scaled by the clamped detection confidence."""
    values = tensor.values
    P, K = values.shape[:2]
    conf = np.clip(np.asarray(confidences, dtype=float).reshape(-1), 0.0, 1.0)
    if conf.shape != (K,):
        raise ValueError(f"expected {K} confidences, got {conf.size}")
    if K == 0 or values.shape[2] == 0 or values.shape[3] == 0:
        return RiskMatrix(np.zeros((P, K)))
    worst = values.max(axis=(2, 3))
    return RiskMatrix(worst * conf[None, :], confidence_applied=True)


def risk_matrix(
    plans: Sequence[Trajectory],
    agents: Sequence[AgentPrediction],
    params: RiskParams = RiskParams(),
) -> RiskMatrix:
    tensor = build_risk_tensor(plans, agents, params)
    return minimax_reduce(tensor, [a.confidence for a in agents])
