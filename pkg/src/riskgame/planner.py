"""One planning step: risk -> sparse graph -> consistency -> analytic cost -> best response.

The learned scoring head of an end-to-end planner is replaced by an analytic
cost::

    cost_p = w_risk * worst_risk(p) + w_cons * consistency(p) + w_goal * goal_dev(p)

The attention refinement (``refine_queries``) runs on the same sparse graph
and is reported alongside the decision, but it does not enter the cost.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
import numpy as np

from .attention import AttentionWeights, TokenSet, risk_biased_attention
from .geometry import Command, Pose2, Trajectory, Velocity2, rotation, transform_to_frame
from .risk import AgentPrediction, RiskMatrix, RiskParams, build_risk_tensor, minimax_reduce
from .sparse_game import SparseGameGraph, build_graph
from .stabilization import ConsistencyScores, HistoryBuffer, consistency_scores, gate_open, push_history

AGGREGATES = ("raw", "normalized")


@dataclass(frozen=True)
class PlannerConfig:
    risk_params: RiskParams = field(default_factory=RiskParams)
    top_m: int = 4
    beta: float = 2.0
    history_t: int = 3
    w_risk: float = 1.0
    w_cons: float = 0.1
    w_goal: float = 0.05
    normalization_scope: str = "global"
    distance: str = "hausdorff"
    risk_aggregate: str = "raw"
    risk_noise: float = 0.0

    def __post_init__(self):
        if self.top_m < 1:
            raise ValueError("top_m must be >= 1")
        if self.history_t < 0:
            raise ValueError("history_t must be >= 0")
        for name in ("w_risk", "w_cons", "w_goal", "risk_noise"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if self.normalization_scope not in ("global", "per-row"):
            raise ValueError(f"unknown normalization_scope {self.normalization_scope!r}")
        if self.distance not in ("hausdorff", "euclidean"):
            raise ValueError(f"unknown distance {self.distance!r}")
        if self.risk_aggregate not in AGGREGATES:
            raise ValueError(f"unknown risk_aggregate {self.risk_aggregate!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PlannerConfig":
        data = dict(data)
        risk = RiskParams(**data.pop("risk_params", {}))
        return cls(risk_params=risk, **data)

    def updated(self, **changes) -> "PlannerConfig":
        risk_changes = {k: changes.pop(k) for k in list(changes) if k in RiskParams.__dataclass_fields__}
        cfg = replace(self, **changes)
        if risk_changes:
            cfg = replace(cfg, risk_params=replace(cfg.risk_params, **risk_changes))
        return cfg


@dataclass(frozen=True, eq=False)
class Scene:
    """Everything the planner sees at one instant, in a common (world) frame.

    ``goal`` overrides the command-conditioned goal point. Without it, the
    straight goal is a forward projection at ``reference_speed`` (falling
    back to the current speed) over the plan horizon.
    """

    ego_pose: Pose2
    ego_velocity: Velocity2
    candidates: tuple[Trajectory, ...]
    agents: tuple[AgentPrediction, ...] = ()
    command: Command = Command.GO_STRAIGHT
    time: float = 0.0
    goal: tuple[float, float] | None = None
    reference_speed: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "command", Command(self.command))
        if not self.candidates:
            raise ValueError("scene needs at least one candidate")


@dataclass(frozen=True)
class CostBreakdown:
    risk: float
    consistency: float
    goal_dev: float
    risk_term: float
    consistency_term: float
    goal_term: float
    total: float


@dataclass(frozen=True, eq=False)
class PlanDecision:
    selected_index: int
    costs: tuple[CostBreakdown, ...]
    risk_matrix: RiskMatrix
    graph: SparseGameGraph
    consistency: ConsistencyScores
    goal: np.ndarray
    refined_queries: np.ndarray | None = None

    @property
    def totals(self) -> np.ndarray:
        return np.array([c.total for c in self.costs])

    def to_dict(self) -> dict:
        out = {
            "selected_index": self.selected_index,
            "costs": [asdict(c) for c in self.costs],
            "risk_matrix": self.risk_matrix.values.tolist(),
            "active": self.graph.active.tolist(),
            "normalized": self.graph.normalized.tolist(),
            "top_m": self.graph.top_m,
            "consistency": self.consistency.scores.tolist(),
            "gate_open": self.consistency.gate_open,
            "goal": self.goal.tolist(),
        }
        if self.refined_queries is not None:
            out["refined_queries"] = self.refined_queries.tolist()
        return out


@dataclass(frozen=True, eq=False)
class TokenEmbedding:
    """Affine maps from 6 kinematic features to attention tokens.

    Agent features: relative x, y, vx, vy, distance, confidence (ego frame).
    Plan features: endpoint x, y, mean vx, vy, path length, duration (ego frame).
    """

    agent_w: np.ndarray  # (6, D_in)
    agent_b: np.ndarray  # (D_in,)
    plan_w: np.ndarray  # (6, D_in)
    plan_b: np.ndarray  # (D_in,)


def goal_point(scene: Scene) -> np.ndarray:
    if scene.goal is not None:
        return np.asarray(scene.goal, dtype=float)
    if scene.command != Command.GO_STRAIGHT:
        raise ValueError(f"command {scene.command.value!r} needs an explicit goal point")
    speed = scene.reference_speed if scene.reference_speed is not None else scene.ego_velocity.speed
    reach = speed * scene.candidates[0].dt * len(scene.candidates[0])
    h = scene.ego_pose.heading
    return scene.ego_pose.xy + reach * np.array([math.cos(h), math.sin(h)])


def worst_risk(matrix: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Per-plan max over the active agents (0 for a plan with none)."""
    masked = np.where(active, matrix, -np.inf)
    if masked.shape[1] == 0:
        return np.zeros(masked.shape[0])
    worst = masked.max(axis=1)
    return np.where(np.isfinite(worst), worst, 0.0)


def agent_features(scene: Scene) -> np.ndarray:
    rows = []
    for agent in scene.agents:
        local = transform_to_frame(agent.modes[0].slice(0, 1), scene.ego_pose)
        ego_v = rotation(-scene.ego_pose.heading) @ [scene.ego_velocity.vx, scene.ego_velocity.vy]
        x, y = local.positions[0]
        vx, vy = local.velocities[0] - ego_v
        rows.append([x, y, vx, vy, math.hypot(x, y), min(max(agent.confidence, 0.0), 1.0)])
    return np.array(rows, dtype=float).reshape(-1, 6)


def plan_features(scene: Scene) -> np.ndarray:
    rows = []
    for cand in scene.candidates:
        local = transform_to_frame(cand, scene.ego_pose)
        pts = np.vstack([[0.0, 0.0], local.positions])
        length = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
        vx, vy = local.velocities.mean(axis=0)
        end_x, end_y = local.positions[-1]
        rows.append([end_x, end_y, vx, vy, length, local.dt * len(local)])
    return np.array(rows, dtype=float).reshape(-1, 6)


def scene_tokens(scene: Scene, embedding: TokenEmbedding) -> TokenSet:
    return TokenSet(
        plan_queries=plan_features(scene) @ embedding.plan_w + embedding.plan_b,
        agent_tokens=agent_features(scene) @ embedding.agent_w + embedding.agent_b,
    )


def refine_queries(
    scene: Scene,
    graph: SparseGameGraph,
    weights: AttentionWeights,
    embedding: TokenEmbedding,
    return_attention: bool = False,
):
    """Run the risk-biased attention on tokens built from the scene's kinematics."""
    return risk_biased_attention(scene_tokens(scene, embedding), graph, weights, return_attention)


def plan_step(
    scene: Scene,
    buffer: HistoryBuffer,
    config: PlannerConfig = PlannerConfig(),
    rng: np.random.Generator | None = None,
    attention: tuple[AttentionWeights, TokenEmbedding] | None = None,
) -> tuple[PlanDecision, HistoryBuffer]:
    """Select the best-response candidate and record it in the history.

    ``rng`` is only drawn from when ``config.risk_noise > 0``; it then perturbs
    the risk matrix with zero-mean Gaussian noise (clipped back to [0, 1]).
    """
    tensor = build_risk_tensor(scene.candidates, scene.agents, config.risk_params)
    matrix = minimax_reduce(tensor, [a.confidence for a in scene.agents])
    if config.risk_noise > 0 and matrix.values.size:
        rng = rng if rng is not None else np.random.default_rng(0)
        noisy = np.clip(matrix.values + rng.normal(0.0, config.risk_noise, matrix.values.shape), 0.0, 1.0)
        matrix = RiskMatrix(noisy, matrix.confidence_applied)
    graph = build_graph(matrix, config.top_m, config.normalization_scope)

    if not gate_open(buffer, scene.command):
        buffer = buffer.cleared()
    local = [transform_to_frame(c, scene.ego_pose) for c in scene.candidates]
    consistency = consistency_scores(
        local, buffer, scene.command, scene.ego_pose, current_time=scene.time, distance=config.distance
    )

    source = matrix.values if config.risk_aggregate == "raw" else graph.normalized
    risk = worst_risk(source, graph.active)
    goal = goal_point(scene)
    goal_dev = np.array([float(np.hypot(*(c.positions[-1] - goal))) for c in scene.candidates])

    costs = []
    for p in range(len(scene.candidates)):
        r_term = config.w_risk * float(risk[p])
        c_term = config.w_cons * float(consistency.scores[p])
        g_term = config.w_goal * float(goal_dev[p])
        costs.append(
            CostBreakdown(
                risk=float(risk[p]),
                consistency=float(consistency.scores[p]),
                goal_dev=float(goal_dev[p]),
                risk_term=r_term,
                consistency_term=c_term,
                goal_term=g_term,
                total=r_term + c_term + g_term,
            )
        )
    totals = np.array([c.total for c in costs])
    selected = int(np.argmin(totals))  # first minimum: lowest index wins ties

    refined = None
    if attention is not None:
        weights, embedding = attention
        refined = refine_queries(scene, graph, weights.with_beta(config.beta), embedding)

    decision = PlanDecision(selected, tuple(costs), matrix, graph, consistency, goal, refined)
    buffer = push_history(buffer, scene.candidates[selected], scene.command, scene.ego_pose, scene.time)
    return decision, buffer
