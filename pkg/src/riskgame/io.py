"""File formats: scenarios, weight fixtures, simulation logs, trajectory bundles, reports.

Everything is JSON. Floats are written with Python's shortest round-trip
repr so a saved file reloads bit-exactly.

Weight fixture layout::

    {"format": "riskgame-weights/1", "kind": "attention" | "spa" | "rta",
     "scalars": {"beta": 2.0, "activation": "relu"},
     "arrays": {"w_q": {"shape": [16, 16], "data": [... row-major ...]}, ...}}

Trajectory bundle layout (for ``evaluate`` without a log)::

    {"format": "riskgame-trajectories/1", "dt": 0.5,
     "plan": {"positions": [[x, y], ...], "velocities": [...]?, "headings": [...]?},
     "gt": {...same...}, "prev_plan": {...}?,
     "agents": [{"positions": ..., "velocities": ...?, "headings": ...?, "length": 4.0, "width": 1.8}],
     "ego_dims": [4.0, 1.8]?, "horizons": [1, 2, 3]?, "tau": 2.0?, "pre_sigma": 8.0?}
"""

from __future__ import annotations

import json
import os
from importlib import resources
from pathlib import Path

import numpy as np

from .adapters import RTAWeights, SPAWeights
from .attention import AttentionWeights
from .errors import ParseError, ValidationError, VersionError
from .geometry import Trajectory
from .metrics import BoxTrack, MetricsReport, PreParams, aggregate, evaluate_frame
from .planner import PlannerConfig, TokenEmbedding
from .risk import RiskParams
from .scenario import Scenario
from .simulator import LOG_FORMAT, Adapters, ContextEmbedding, SimulationLog

WEIGHTS_FORMAT = "riskgame-weights/1"
BUNDLE_FORMAT = "riskgame-trajectories/1"
CONFIG_DIR_ENV = "RISKGAME_CONFIG_DIR"
BUILTIN_PREFIX = "builtin:"


def data_path(name: str) -> Path:
    """Path of a file shipped in the package's ``data`` directory."""
    return Path(str(resources.files("riskgame") / "data" / name))


def resolve_path(ref: str, base: Path | None = None) -> Path:
    if ref.startswith(BUILTIN_PREFIX):
        return data_path(ref[len(BUILTIN_PREFIX) :])
    path = Path(ref)
    if not path.is_absolute() and base is not None:
        path = base / path
    return path


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- scenarios ----------------------------------------------------------


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file.

    Raises ParseError for malformed JSON, VersionError for an unknown version
    tag and ValidationError (with the field path) for invariant breaches.
    """
    return Scenario.from_dict(read_json(path))


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(dumps(scenario.to_dict()))


def load_config_file(path) -> dict:
    data = read_json(path)
    if not isinstance(data, dict):
        raise ValidationError("<root>", "config must be a JSON object")
    return data


def default_config_overrides() -> dict:
    """Planner overrides from ``$RISKGAME_CONFIG_DIR/config.json``, if present."""
    directory = os.environ.get(CONFIG_DIR_ENV)
    if not directory:
        return {}
    path = Path(directory) / "config.json"
    return load_config_file(path) if path.exists() else {}


def apply_config(base: PlannerConfig, overrides: dict) -> PlannerConfig:
    data = base.to_dict()
    risk = dict(data.pop("risk_params"))
    risk.update(overrides.get("risk_params", {}))
    for key, value in overrides.items():
        if key == "risk_params":
            continue
        if key not in data:
            raise ValidationError(f"config.{key}", "unknown planner field")
        data[key] = value
    try:
        return PlannerConfig.from_dict({**data, "risk_params": risk})
    except (TypeError, ValueError) as exc:
        raise ValidationError("config", str(exc)) from None


# -- weight fixtures ----------------------------------------------------


def save_weights(path, kind: str, arrays: dict, scalars: dict | None = None) -> None:
    payload = {
        "format": WEIGHTS_FORMAT,
        "kind": kind,
        "scalars": scalars or {},
        "arrays": {
            name: {"shape": list(np.shape(a)), "data": np.asarray(a, dtype=float).reshape(-1).tolist()}
            for name, a in sorted(arrays.items())
        },
    }
    Path(path).write_text(dumps(payload))


def load_weights(path) -> tuple[str, dict, dict]:
    """Return (kind, scalars, arrays) with every array checked against its declared shape."""
    data = read_json(path)
    if data.get("format") != WEIGHTS_FORMAT:
        raise VersionError(f"format: expected {WEIGHTS_FORMAT!r}, got {data.get('format')!r}")
    arrays = {}
    for name, entry in data.get("arrays", {}).items():
        shape = entry.get("shape")
        flat = entry.get("data")
        if not isinstance(shape, list) or not isinstance(flat, list):
            raise ValidationError(f"arrays.{name}", "needs 'shape' and 'data' lists")
        arr = np.asarray(flat, dtype=float)
        if arr.size != int(np.prod(shape)):
            raise ValidationError(f"arrays.{name}", f"declared shape {shape} but {arr.size} values")
        arrays[name] = arr.reshape(shape)
    return data.get("kind", ""), data.get("scalars", {}), arrays


def _pick(arrays: dict, names, path) -> dict:
    missing = [n for n in names if n not in arrays]
    if missing:
        raise ValidationError(f"{path}.arrays", f"missing {missing}")
    return {n: arrays[n] for n in names}


ATTENTION_ARRAYS = ("w_q", "w_k", "w_v", "ffn_w1", "ffn_b1", "ffn_w2", "ffn_b2", "ln_gamma", "ln_beta")
EMBED_ARRAYS = ("agent_w", "agent_b", "plan_w", "plan_b")
SPA_ARRAYS = ("traj_proj", "traj_proj_b", "ctx_q", "ctx_k", "ctx_v", "cross_q", "cross_k", "cross_v", "decoder_w", "decoder_b")
CONTEXT_ARRAYS = ("ego_w", "ego_b", "det_w", "det_b")
RTA_ARRAYS = ("attn_q", "attn_k", "attn_v", "gate_bias", "delta_w", "delta_b")


def load_attention_weights(path) -> tuple[AttentionWeights, TokenEmbedding | None]:
    kind, scalars, arrays = load_weights(path)
    if kind != "attention":
        raise ValidationError("kind", f"expected 'attention', got {kind!r}")
    weights = AttentionWeights(
        **_pick(arrays, ATTENTION_ARRAYS, str(path)),
        beta=float(scalars.get("beta", 2.0)),
        activation=scalars.get("activation", "relu"),
    )
    embedding = None
    if all(n in arrays for n in EMBED_ARRAYS):
        embedding = TokenEmbedding(**_pick(arrays, EMBED_ARRAYS, str(path)))
    return weights, embedding


def load_spa_weights(path) -> tuple[SPAWeights, ContextEmbedding | None]:
    kind, _, arrays = load_weights(path)
    if kind != "spa":
        raise ValidationError("kind", f"expected 'spa', got {kind!r}")
    embedding = None
    if all(n in arrays for n in CONTEXT_ARRAYS):
        embedding = ContextEmbedding(**_pick(arrays, CONTEXT_ARRAYS, str(path)))
    return SPAWeights(**_pick(arrays, SPA_ARRAYS, str(path))), embedding


def load_rta_weights(path) -> RTAWeights:
    kind, scalars, arrays = load_weights(path)
    if kind != "rta":
        raise ValidationError("kind", f"expected 'rta', got {kind!r}")
    return RTAWeights(**_pick(arrays, RTA_ARRAYS, str(path)), activation=scalars.get("activation", "relu"))


def scenario_adapters(scenario: Scenario, base: Path | None = None) -> Adapters:
    """Load the fixture weights a scenario refers to (paths relative to ``base``)."""
    spa = attention = None
    if scenario.spa_weights:
        weights, embedding = load_spa_weights(resolve_path(scenario.spa_weights, base))
        if embedding is None:
            raise ValidationError("spa_weights", "fixture lacks the context embedding arrays")
        spa = (weights, embedding)
    if scenario.attention_weights:
        weights, embedding = load_attention_weights(resolve_path(scenario.attention_weights, base))
        if embedding is None:
            raise ValidationError("attention_weights", "fixture lacks the token embedding arrays")
        attention = (weights, embedding)
    return Adapters(spa=spa, attention=attention)


# -- logs and evaluation ------------------------------------------------


def save_log(log: SimulationLog, path) -> None:
    Path(path).write_text(log.to_jsonl())


def load_log(path) -> SimulationLog:
    try:
        log = SimulationLog.from_jsonl(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    except (json.JSONDecodeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    if log.header.get("format") != LOG_FORMAT:
        raise VersionError(f"format: expected {LOG_FORMAT!r}, got {log.header.get('format')!r}")
    return log


def _state_trajectory(states: list[dict], dt: float) -> Trajectory:
    return Trajectory(
        dt,
        [[s["x"], s["y"]] for s in states],
        [s["heading"] for s in states],
        [[s["vx"], s["vy"]] for s in states],
    )


def evaluate_log(log: SimulationLog, pre_params: PreParams | None = None) -> MetricsReport:
    """Score every logged plan whose full horizon is covered by later logged states.

    Ground truth for frame n is the logged ego and agent states at steps
    n+1 .. n+T; TPC compares frame n with frame n-1.
    """
    scenario = Scenario.from_dict(log.header["scenario"])
    config = PlannerConfig.from_dict(log.header["config"])
    dt, T = scenario.dt, scenario.horizon
    states = [{"ego": r["ego"], "agents": r["agents"]} for r in log.records]
    if log.final is not None:
        states.append({"ego": log.final["ego"], "agents": log.final["agents"]})
    frames = len(states) - T
    if frames < 1:
        raise ValidationError("log", f"{len(log.records)} steps logged; need at least {T} to cover one plan horizon")

    reports, prev = [], None
    for n in range(frames):
        p = log.records[n]["plan"]
        plan = Trajectory(dt, p["positions"], p["headings"], p["velocities"])
        future = states[n + 1 : n + 1 + T]
        gt = _state_trajectory([s["ego"] for s in future], dt)
        tracks = []
        for j, agent in enumerate(future[0]["agents"]):
            track = _state_trajectory([s["agents"][j] for s in future], dt)
            tracks.append(BoxTrack(track, agent["length"], agent["width"]))
        reports.append(
            evaluate_frame(
                plan,
                gt,
                tracks,
                ego_dims=(scenario.ego.length, scenario.ego.width),
                horizons=scenario.horizons,
                pre_params=scenario.pre_params if pre_params is None else pre_params,
                risk_params=config.risk_params,
                prev_plan=prev,
            )
        )
        prev = plan
    return aggregate(reports)


def _bundle_trajectory(d: dict, dt: float, path: str) -> Trajectory:
    if not isinstance(d, dict) or "positions" not in d:
        raise ValidationError(path, "needs 'positions'")
    try:
        return Trajectory.from_positions(d["positions"], dt, headings=d.get("headings"), velocities=d.get("velocities"))
    except ValueError as exc:
        raise ValidationError(path, str(exc)) from None


def evaluate_bundle(data: dict) -> MetricsReport:
    if data.get("format") != BUNDLE_FORMAT:
        raise VersionError(f"format: expected {BUNDLE_FORMAT!r}, got {data.get('format')!r}")
    dt = data.get("dt")
    if not isinstance(dt, (int, float)) or not dt > 0:
        raise ValidationError("dt", f"must be > 0, got {dt!r}")
    plan = _bundle_trajectory(data.get("plan"), dt, "plan")
    gt = _bundle_trajectory(data.get("gt"), dt, "gt")
    prev = _bundle_trajectory(data["prev_plan"], dt, "prev_plan") if "prev_plan" in data else None
    tracks = []
    for i, a in enumerate(data.get("agents", [])):
        tracks.append(BoxTrack(_bundle_trajectory(a, dt, f"agents[{i}]"), float(a.get("length", 4.0)), float(a.get("width", 1.8))))
    return evaluate_frame(
        plan,
        gt,
        tracks,
        ego_dims=tuple(data.get("ego_dims", (4.0, 1.8))),
        horizons=tuple(data.get("horizons", (1.0, 2.0, 3.0))),
        pre_params=PreParams(data.get("tau", 2.0), data.get("pre_sigma", 8.0)),
        risk_params=RiskParams(**data.get("risk_params", {})),
        prev_plan=prev,
    )


def report_schema() -> dict:
    return json.loads(data_path("report.schema.json").read_text())


def save_report(report: MetricsReport, path) -> None:
    Path(path).write_text(report.to_json())


__all__ = [
    "load_scenario",
    "save_scenario",
    "load_weights",
    "save_weights",
    "load_attention_weights",
    "load_spa_weights",
    "load_rta_weights",
    "load_log",
    "save_log",
    "evaluate_log",
    "evaluate_bundle",
    "report_schema",
]
