"""Risk-prioritised sparse game planning at desk scale.

Minimax collision risk, top-M sparse interaction graphs, risk-biased
attention, Hausdorff-gated temporal stabilisation, and the evaluation
metrics (L2, collision rate, PRE, TPC) with a deterministic closed-loop
simulator.
"""

from .errors import (
    DimensionMismatch,
    EmptyMap,
    EmptyTrajectory,
    HorizonMismatch,
    NoOverlap,
    ParseError,
    RiskGameError,
    ValidationError,
    VersionError,
)
from .geometry import (
    Command,
    OrientedBox,
    Pose2,
    Trajectory,
    Velocity2,
    box_overlap,
    transform_from_frame,
    transform_to_frame,
)
from .risk import (
    AgentPrediction,
    RiskMatrix,
    RiskParams,
    RiskTensor,
    build_risk_tensor,
    instantaneous_risk,
    minimax_reduce,
    relative_kinematics,
    ttc,
)
from .sparse_game import SparseGameGraph, build_graph, normalize_risk, select_top_m
from .attention import AttentionWeights, TokenSet, risk_biased_attention, softmax_row
from .adapters import EmbeddingSet, RTAWeights, SceneContext, SPAWeights, rta_gate, spa_refine
from .stabilization import HistoryBuffer, consistency_scores, hausdorff, push_history
from .planner import PlanDecision, PlannerConfig, Scene, plan_step, refine_queries
from .metrics import BoxTrack, MetricsReport, PreParams, collision_rate, l2_error, pre, tpc
from .scenario import Scenario
from .simulator import SimulationLog, run

__version__ = "0.1.0"

__all__ = [
    "DimensionMismatch",
    "EmptyMap",
    "EmptyTrajectory",
    "HorizonMismatch",
    "NoOverlap",
    "ParseError",
    "RiskGameError",
    "ValidationError",
    "VersionError",
    "Command",
    "OrientedBox",
    "Pose2",
    "Trajectory",
    "Velocity2",
    "box_overlap",
    "transform_from_frame",
    "transform_to_frame",
    "AgentPrediction",
    "RiskMatrix",
    "RiskParams",
    "RiskTensor",
    "build_risk_tensor",
    "instantaneous_risk",
    "minimax_reduce",
    "relative_kinematics",
    "ttc",
    "SparseGameGraph",
    "build_graph",
    "normalize_risk",
    "select_top_m",
    "AttentionWeights",
    "TokenSet",
    "risk_biased_attention",
    "softmax_row",
    "EmbeddingSet",
    "RTAWeights",
    "SceneContext",
    "SPAWeights",
    "rta_gate",
    "spa_refine",
    "HistoryBuffer",
    "consistency_scores",
    "hausdorff",
    "push_history",
    "PlanDecision",
    "PlannerConfig",
    "Scene",
    "plan_step",
    "refine_queries",
    "BoxTrack",
    "MetricsReport",
    "PreParams",
    "collision_rate",
    "l2_error",
    "pre",
    "tpc",
    "Scenario",
    "SimulationLog",
    "run",
]
