"""Deterministic closed-loop harness around ``plan_step``.

Each step: predict agents (constant-velocity rollouts, one fixed offset per
mode), place the ego-frame templates at the current ego pose (optionally
refined by ``spa_refine``), plan, then move the ego one sample along the
selected plan and the agents along their scripts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .adapters import SceneContext, SPAWeights, spa_refine
from .attention import AttentionWeights
from .geometry import Pose2, Trajectory, Velocity2, transform_from_frame
from .planner import PlanDecision, PlannerConfig, Scene, TokenEmbedding, agent_features, plan_step
from .risk import AgentPrediction
from .scenario import AgentScript, Scenario
from .stabilization import HistoryBuffer

LOG_FORMAT = "riskgame-log/1"


@dataclass(frozen=True, eq=False)
class ContextEmbedding:
    """Affine maps from ego features (speed, cos yaw, sin yaw) and agent features to SPA tokens."""

    ego_w: np.ndarray  # (3, D)
    ego_b: np.ndarray
    det_w: np.ndarray  # (6, D)
    det_b: np.ndarray


@dataclass
class AgentState:
    script: AgentScript
    pose: Pose2
    velocity: Velocity2
    waypoint_index: int = 0

    def to_dict(self) -> dict:
        return {
            "name": self.script.name,
            "x": self.pose.x,
            "y": self.pose.y,
            "heading": self.pose.heading,
            "vx": self.velocity.vx,
            "vy": self.velocity.vy,
            "length": self.script.length,
            "width": self.script.width,
            "confidence": self.script.confidence,
        }


@dataclass
class WorldState:
    step: int
    dt: float
    ego_pose: Pose2
    ego_velocity: Velocity2
    agents: list[AgentState]
    buffer: HistoryBuffer
    rng: np.random.Generator

    @property
    def time(self) -> float:
        return self.step * self.dt


@dataclass
class Adapters:
    """Optional fixture weights used inside the loop."""

    spa: tuple[SPAWeights, ContextEmbedding] | None = None
    attention: tuple[AttentionWeights, TokenEmbedding] | None = None


def initial_world(scenario: Scenario, config: PlannerConfig, seed: int) -> WorldState:
    agents = [AgentState(a, a.pose, a.velocity) for a in scenario.agents]
    return WorldState(
        step=0,
        dt=scenario.dt,
        ego_pose=scenario.ego.pose,
        ego_velocity=scenario.ego.velocity,
        agents=agents,
        buffer=HistoryBuffer(config.history_t),
        rng=np.random.default_rng(seed),
    )


def predict_agent(state: AgentState, dt: float, horizon: int) -> AgentPrediction:
    steps = dt * np.arange(1, horizon + 1)[:, None]
    v = np.array([state.velocity.vx, state.velocity.vy])
    base = state.pose.xy + steps * v
    heading = math.atan2(v[1], v[0]) if np.hypot(*v) > 1e-9 else state.pose.heading
    modes = []
    for dx, dy in state.script.offsets():
        modes.append(Trajectory(dt, base + [dx, dy], np.full(horizon, heading), np.tile(v, (horizon, 1))))
    return AgentPrediction(tuple(modes), state.script.confidence)


def advance_agent(state: AgentState, dt: float) -> AgentState:
    if state.script.kind == "constant-velocity":
        pose = Pose2(state.pose.x + state.velocity.vx * dt, state.pose.y + state.velocity.vy * dt, state.pose.heading)
        return replace(state, pose=pose)

    speed = state.script.velocity.speed
    pos = state.pose.xy
    idx = state.waypoint_index
    remaining = speed * dt
    heading = state.pose.heading
    waypoints = state.script.waypoints
    while remaining > 0 and idx < len(waypoints):
        delta = np.asarray(waypoints[idx]) - pos
        dist = float(np.hypot(*delta))
        if dist > 1e-12:
            heading = math.atan2(delta[1], delta[0])
        if dist <= remaining:
            pos = np.asarray(waypoints[idx], dtype=float)
            remaining -= dist
            idx += 1
        else:
            pos = pos + delta / dist * remaining
            remaining = 0.0
    if idx < len(waypoints):
        delta = np.asarray(waypoints[idx]) - pos
        direction = delta / max(float(np.hypot(*delta)), 1e-12)
        velocity = Velocity2(*(speed * direction))
    else:
        velocity = Velocity2(0.0, 0.0)
    return replace(state, pose=Pose2(pos[0], pos[1], heading), velocity=velocity, waypoint_index=idx)


def _spa_context(world: WorldState, scene_agents, embedding: ContextEmbedding, dt: float) -> SceneContext:
    probe = Scene(world.ego_pose, world.ego_velocity, (Trajectory(dt, [[0.0, 0.0]], [0.0], [[0.0, 0.0]]),), scene_agents)
    ego_feat = np.array([[world.ego_velocity.speed, math.cos(world.ego_pose.heading), math.sin(world.ego_pose.heading)]])
    det = agent_features(probe)
    return SceneContext(
        ego_token=ego_feat @ embedding.ego_w + embedding.ego_b,
        det_tokens=det @ embedding.det_w + embedding.det_b if len(det) else np.zeros((0, embedding.ego_w.shape[1])),
    )


def build_scene(world: WorldState, scenario: Scenario, adapters: Adapters = Adapters()) -> Scene:
    """What the planner sees at the world's current step (candidates in world frame)."""
    dt, horizon = scenario.dt, scenario.horizon
    command = scenario.command_at(world.step)
    predictions = tuple(predict_agent(a, dt, horizon) for a in world.agents)

    local = scenario.template_trajectories()
    if adapters.spa is not None:
        weights, embedding = adapters.spa
        local = spa_refine(local, _spa_context(world, predictions, embedding, dt), weights)
    return Scene(
        ego_pose=world.ego_pose,
        ego_velocity=world.ego_velocity,
        candidates=tuple(transform_from_frame(t, world.ego_pose) for t in local),
        agents=predictions,
        command=command,
        time=world.time,
        goal=scenario.goal_for(command),
        reference_speed=scenario.ego.speed,
    )


def step(
    world: WorldState,
    scenario: Scenario,
    config: PlannerConfig,
    adapters: Adapters = Adapters(),
) -> tuple[WorldState, dict, PlanDecision]:
    """Plan once and advance the world by one dt. Returns the new world, the log record, and the decision."""
    dt = scenario.dt
    scene = build_scene(world, scenario, adapters)
    command, candidates = scene.command, scene.candidates
    decision, buffer = plan_step(scene, world.buffer, config, world.rng, adapters.attention)
    chosen = candidates[decision.selected_index]

    names = [t.name for t in scenario.all_templates()]
    record = {
        "type": "step",
        "step": world.step,
        "time": world.time,
        "command": command.value,
        "ego": _ego_dict(world.ego_pose, world.ego_velocity),
        "agents": [a.to_dict() for a in world.agents],
        "selected_index": decision.selected_index,
        "selected_name": names[decision.selected_index],
        "plan": {
            "positions": chosen.positions.tolist(),
            "headings": chosen.headings.tolist(),
            "velocities": chosen.velocities.tolist(),
        },
        "decision": decision.to_dict(),
    }

    new_world = WorldState(
        step=world.step + 1,
        dt=dt,
        ego_pose=chosen.pose(0),
        ego_velocity=chosen.velocity(0),
        agents=[advance_agent(a, dt) for a in world.agents],
        buffer=buffer,
        rng=world.rng,
    )
    return new_world, record, decision


def _ego_dict(pose: Pose2, vel: Velocity2) -> dict:
    return {"x": pose.x, "y": pose.y, "heading": pose.heading, "vx": vel.vx, "vy": vel.vy}


@dataclass
class SimulationLog:
    header: dict
    records: list[dict] = field(default_factory=list)
    final: dict | None = None

    def to_jsonl(self) -> str:
        lines = [self.header] + self.records + ([self.final] if self.final is not None else [])
        return "".join(json.dumps(x, sort_keys=True, separators=(",", ":")) + "\n" for x in lines)

    @classmethod
    def from_jsonl(cls, text: str) -> "SimulationLog":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows or rows[0].get("type") != "header":
            raise ValueError("log must start with a header record")
        header = rows[0]
        records = [r for r in rows[1:] if r.get("type") == "step"]
        finals = [r for r in rows[1:] if r.get("type") == "final"]
        return cls(header, records, finals[-1] if finals else None)

    def selected_indices(self) -> list[int]:
        return [r["selected_index"] for r in self.records]

    def mode_switches(self) -> int:
        sel = self.selected_indices()
        return sum(a != b for a, b in zip(sel, sel[1:]))


def run(
    scenario: Scenario,
    steps: int | None = None,
    config: PlannerConfig | None = None,
    seed: int | None = None,
    adapters: Adapters = Adapters(),
) -> SimulationLog:
    """Closed-loop rollout; identical inputs give a bit-identical log."""
    steps = scenario.steps if steps is None else steps
    if steps < 1:
        raise ValueError("steps must be >= 1")
    config = scenario.planner if config is None else config
    seed = scenario.seed if seed is None else seed
    world = initial_world(scenario, config, seed)
    header = {
        "type": "header",
        "format": LOG_FORMAT,
        "seed": seed,
        "steps": steps,
        "scenario": scenario.to_dict(),
        "config": config.to_dict(),
        "adapters": {"spa": adapters.spa is not None, "attention": adapters.attention is not None},
    }
    log = SimulationLog(header)
    for _ in range(steps):
        world, record, _ = step(world, scenario, config, adapters)
        log.records.append(record)
    log.final = {
        "type": "final",
        "step": world.step,
        "time": world.time,
        "ego": _ego_dict(world.ego_pose, world.ego_velocity),
        "agents": [a.to_dict() for a in world.agents],
    }
    return log
