"""Scenario description: ego, candidate templates, scripted agents, commands, parameters.

``Scenario.from_dict`` validates every field and raises ``ValidationError``
with a dotted path to the offending entry; ``to_dict`` is its exact inverse
on valid input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError, VersionError
from .geometry import Command, Pose2, Trajectory, Velocity2
from .metrics import DEFAULT_HORIZONS, PreParams
from .planner import PlannerConfig

SCENARIO_VERSION = "riskgame-scenario/1"
AGENT_KINDS = ("constant-velocity", "waypoint-follow")


def _num(data: dict, key: str, path: str, *, positive=False, nonneg=False, default=None) -> float:
    if key not in data:
        if default is not None:
            return default
        raise ValidationError(f"{path}.{key}".lstrip("."), "missing")
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError(f"{path}.{key}".lstrip("."), f"expected a finite number, got {value!r}")
    if positive and not value > 0:
        raise ValidationError(f"{path}.{key}".lstrip("."), f"must be > 0, got {value}")
    if nonneg and value < 0:
        raise ValidationError(f"{path}.{key}".lstrip("."), f"must be >= 0, got {value}")
    return float(value)


def _int(data: dict, key: str, path: str, *, minimum: int = 0, default=None) -> int:
    if key not in data:
        if default is not None:
            return default
        raise ValidationError(f"{path}.{key}".lstrip("."), "missing")
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ValidationError(f"{path}.{key}".lstrip("."), f"expected an integer >= {minimum}, got {value!r}")
    return value


def _pair(value, path: str) -> tuple[float, float]:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ValidationError(path, f"expected [x, y], got {value!r}")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(path, f"expected finite numbers, got {value!r}")
    return float(value[0]), float(value[1])


def _command(value, path: str) -> Command:
    try:
        return Command(value)
    except ValueError:
        raise ValidationError(path, f"unknown command {value!r}; expected one of {[c.value for c in Command]}")


def _box_dims(data: dict, path: str) -> tuple[float, float]:
    length = _num(data, "length", path, positive=True)
    width = _num(data, "width", path, positive=True)
    if length < width:
        raise ValidationError(f"{path}.length".lstrip("."), f"length {length} must be >= width {width}")
    return length, width


@dataclass(frozen=True)
class EgoSpec:
    pose: Pose2
    speed: float
    length: float = 4.0
    width: float = 1.8

    @property
    def velocity(self) -> Velocity2:
        return Velocity2(self.speed * math.cos(self.pose.heading), self.speed * math.sin(self.pose.heading))


@dataclass(frozen=True, eq=False)
class TemplateSpec:
    """Candidate plan in the ego frame (origin at the ego, x forward)."""

    name: str
    points: np.ndarray  # (T, 2)

    def __eq__(self, other):
        return isinstance(other, TemplateSpec) and self.name == other.name and np.array_equal(self.points, other.points)


@dataclass(frozen=True)
class AgentScript:
    name: str
    kind: str
    pose: Pose2
    velocity: Velocity2
    length: float = 4.0
    width: float = 1.8
    confidence: float = 1.0
    prediction_modes: int = 1
    mode_offsets: tuple[tuple[float, float], ...] = ()
    waypoints: tuple[tuple[float, float], ...] = ()

    def offsets(self) -> list[tuple[float, float]]:
        """One world-frame position offset per prediction mode (zero-padded)."""
        given = list(self.mode_offsets[: self.prediction_modes])
        return given + [(0.0, 0.0)] * (self.prediction_modes - len(given))


def template_generator(params: dict, dt: float, horizon: int) -> list[TemplateSpec]:
    """Constant-speed templates with a smooth lateral shift, one per (speed, offset)."""
    tau = np.arange(1, horizon + 1) / horizon
    blend = 3 * tau**2 - 2 * tau**3
    out = []
    for v in params["speeds"]:
        for lat in params["lateral_offsets"]:
            x = v * dt * np.arange(1, horizon + 1)
            pts = np.column_stack([x, lat * blend])
            out.append(TemplateSpec(f"v{v:g}_y{lat:+g}", pts))
    return out


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    dt: float
    horizon: int
    ego: EgoSpec
    templates: tuple[TemplateSpec, ...] = ()
    template_generator: dict | None = None
    agents: tuple[AgentScript, ...] = ()
    commands: tuple[tuple[int, Command], ...] = ()
    goals: dict = field(default_factory=dict)
    horizons: tuple[float, ...] = DEFAULT_HORIZONS
    pre_params: PreParams = field(default_factory=PreParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    steps: int = 10
    seed: int = 0
    spa_weights: str | None = None
    attention_weights: str | None = None
    version: str = SCENARIO_VERSION

    def all_templates(self) -> list[TemplateSpec]:
        out = list(self.templates)
        if self.template_generator:
            out += template_generator(self.template_generator, self.dt, self.horizon)
        return out

    def template_trajectories(self) -> list[Trajectory]:
        """Templates in the ego frame; velocities by backward difference from the origin."""
        out = []
        for tpl in self.all_templates():
            pts = np.vstack([[0.0, 0.0], tpl.points])
            vel = np.diff(pts, axis=0) / self.dt
            out.append(Trajectory.from_positions(tpl.points, self.dt, velocities=vel))
        return out

    def command_at(self, step: int) -> Command:
        current = Command.GO_STRAIGHT
        for start, cmd in self.commands:
            if start <= step:
                current = cmd
        return current

    def goal_for(self, command: Command) -> tuple[float, float] | None:
        return self.goals.get(Command(command).value)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    # -- serialisation -------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "version": self.version,
            "name": self.name,
            "dt": self.dt,
            "horizon": self.horizon,
            "steps": self.steps,
            "seed": self.seed,
            "ego": {
                "pose": [self.ego.pose.x, self.ego.pose.y, self.ego.pose.heading],
                "speed": self.ego.speed,
                "length": self.ego.length,
                "width": self.ego.width,
            },
            "templates": [{"name": t.name, "points": t.points.tolist()} for t in self.templates],
            "agents": [_agent_to_dict(a) for a in self.agents],
            "commands": [{"step": s, "command": c.value} for s, c in self.commands],
            "goals": {k: list(v) for k, v in sorted(self.goals.items())},
            "metrics": {
                "horizons": list(self.horizons),
                "tau": self.pre_params.tau,
                "pre_sigma": self.pre_params.pre_sigma,
            },
            "planner": self.planner.to_dict(),
        }
        if self.template_generator is not None:
            out["template_generator"] = self.template_generator
        if self.spa_weights is not None:
            out["spa_weights"] = self.spa_weights
        if self.attention_weights is not None:
            out["attention_weights"] = self.attention_weights
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise ValidationError("<root>", "scenario must be a JSON object")
        version = data.get("version")
        if version != SCENARIO_VERSION:
            raise VersionError(f"version: unsupported scenario version {version!r}, expected {SCENARIO_VERSION!r}")
        dt = _num(data, "dt", "", positive=True)
        horizon = _int(data, "horizon", "", minimum=1)
        steps = _int(data, "steps", "", minimum=1, default=10)
        seed = _int(data, "seed", "", minimum=0, default=0)
        name = str(data.get("name", "unnamed"))

        ego_d = data.get("ego")
        if not isinstance(ego_d, dict):
            raise ValidationError("ego", "missing or not an object")
        pose = ego_d.get("pose")
        if not (isinstance(pose, list) and len(pose) == 3):
            raise ValidationError("ego.pose", f"expected [x, y, heading], got {pose!r}")
        x, y = _pair(pose[:2], "ego.pose")
        heading = _num({"h": pose[2]}, "h", "ego.pose")
        length, width = _box_dims({"length": 4.0, "width": 1.8, **ego_d}, "ego")
        ego = EgoSpec(Pose2(x, y, heading), _num(ego_d, "speed", "ego", nonneg=True), length, width)

        templates = []
        for i, t in enumerate(data.get("templates", [])):
            path = f"templates[{i}]"
            if not isinstance(t, dict) or "points" not in t:
                raise ValidationError(path, "expected {name, points}")
            pts = [_pair(p, f"{path}.points[{j}]") for j, p in enumerate(t["points"])]
            if len(pts) != horizon:
                raise ValidationError(f"{path}.points", f"has {len(pts)} points, horizon is {horizon}")
            templates.append(TemplateSpec(str(t.get("name", f"template{i}")), np.array(pts, dtype=float).reshape(-1, 2)))

        generator = data.get("template_generator")
        if generator is not None:
            for key in ("speeds", "lateral_offsets"):
                vals = generator.get(key) if isinstance(generator, dict) else None
                if not isinstance(vals, list) or not vals:
                    raise ValidationError(f"template_generator.{key}", "expected a non-empty list of numbers")
                for j, v in enumerate(vals):
                    _num({"v": v}, "v", f"template_generator.{key}[{j}]")
        if not templates and not generator:
            raise ValidationError("templates", "scenario needs at least one template")

        agents = tuple(_agent_from_dict(a, f"agents[{i}]") for i, a in enumerate(data.get("agents", [])))

        commands = []
        for i, c in enumerate(data.get("commands", [])):
            path = f"commands[{i}]"
            if not isinstance(c, dict):
                raise ValidationError(path, "expected {step, command}")
            commands.append((_int(c, "step", path), _command(c.get("command"), f"{path}.command")))
        if [s for s, _ in commands] != sorted(s for s, _ in commands):
            raise ValidationError("commands", "entries must be ordered by step")

        goals = {}
        for key, value in (data.get("goals") or {}).items():
            goals[_command(key, f"goals.{key}").value] = _pair(value, f"goals.{key}")

        metrics = data.get("metrics", {})
        horizons = tuple(float(h) for h in metrics.get("horizons", DEFAULT_HORIZONS))
        for j, h in enumerate(horizons):
            n = h / dt
            if not (h > 0 and abs(n - round(n)) < 1e-6 and round(n) <= horizon):
                raise ValidationError(f"metrics.horizons[{j}]", f"{h}s is not a multiple of dt within the plan horizon")
        pre_params = PreParams(
            _num(metrics, "tau", "metrics", positive=True, default=2.0),
            _num(metrics, "pre_sigma", "metrics", positive=True, default=8.0),
        )

        try:
            planner = PlannerConfig.from_dict(data.get("planner", {}))
        except (TypeError, ValueError) as exc:
            raise ValidationError("planner", str(exc)) from None

        return cls(
            name=name,
            dt=dt,
            horizon=horizon,
            ego=ego,
            templates=tuple(templates),
            template_generator=generator,
            agents=agents,
            commands=tuple(commands),
            goals=goals,
            horizons=horizons,
            pre_params=pre_params,
            planner=planner,
            steps=steps,
            seed=seed,
            spa_weights=data.get("spa_weights"),
            attention_weights=data.get("attention_weights"),
            version=version,
        )


def _agent_to_dict(a: AgentScript) -> dict:
    out = {
        "name": a.name,
        "kind": a.kind,
        "pose": [a.pose.x, a.pose.y, a.pose.heading],
        "velocity": [a.velocity.vx, a.velocity.vy],
        "length": a.length,
        "width": a.width,
        "confidence": a.confidence,
        "prediction_modes": a.prediction_modes,
        "mode_offsets": [list(o) for o in a.mode_offsets],
    }
    if a.waypoints:
        out["waypoints"] = [list(w) for w in a.waypoints]
    return out


def _agent_from_dict(d, path: str) -> AgentScript:
    if not isinstance(d, dict):
        raise ValidationError(path, "expected an object")
    kind = d.get("kind", "constant-velocity")
    if kind not in AGENT_KINDS:
        raise ValidationError(f"{path}.kind", f"unknown kind {kind!r}; expected one of {AGENT_KINDS}")
    pose = d.get("pose")
    if not (isinstance(pose, list) and len(pose) == 3):
        raise ValidationError(f"{path}.pose", f"expected [x, y, heading], got {pose!r}")
    x, y = _pair(pose[:2], f"{path}.pose")
    heading = _num({"h": pose[2]}, "h", f"{path}.pose")
    vx, vy = _pair(d.get("velocity", [0.0, 0.0]), f"{path}.velocity")
    length, width = _box_dims({"length": 4.0, "width": 1.8, **d}, path)
    confidence = _num(d, "confidence", path, default=1.0)
    if not 0.0 <= confidence <= 1.0:
        raise ValidationError(f"{path}.confidence", f"must lie in [0, 1], got {confidence}")
    modes = _int(d, "prediction_modes", path, minimum=1, default=1)
    offsets = tuple(_pair(o, f"{path}.mode_offsets[{j}]") for j, o in enumerate(d.get("mode_offsets", [])))
    waypoints = tuple(_pair(w, f"{path}.waypoints[{j}]") for j, w in enumerate(d.get("waypoints", [])))
    if kind == "waypoint-follow" and not waypoints:
        raise ValidationError(f"{path}.waypoints", "waypoint-follow agents need at least one waypoint")
    return AgentScript(
        name=str(d.get("name", path)),
        kind=kind,
        pose=Pose2(x, y, heading),
        velocity=Velocity2(vx, vy),
        length=length,
        width=width,
        confidence=confidence,
        prediction_modes=modes,
        mode_offsets=offsets,
        waypoints=waypoints,
    )
