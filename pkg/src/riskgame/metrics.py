"""Planning metrics: L2 displacement, collision rate, risk exposure (PRE), TPC.

Per-horizon values follow the usual 1s/2s/3s/Avg layout, where Avg is the
plain mean of the horizon columns.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import HorizonMismatch, NoOverlap
from .geometry import OrientedBox, Trajectory, box_overlap
from .risk import RiskParams, ttc

DEFAULT_HORIZONS = (1.0, 2.0, 3.0)
DEFAULT_EGO_DIMS = (4.0, 1.8)


@dataclass(frozen=True)
class PreParams:
    tau: float = 2.0
    pre_sigma: float = 8.0

    def __post_init__(self):
        if not (self.tau > 0 and self.pre_sigma > 0 and math.isfinite(self.tau) and math.isfinite(self.pre_sigma)):
            raise ValueError("tau and pre_sigma must be strictly positive")


@dataclass(frozen=True, eq=False)
class BoxTrack:
    """Ground-truth box of one agent over time; ``present`` masks absent steps."""

    trajectory: Trajectory
    length: float
    width: float
    present: np.ndarray | None = None

    def box(self, i: int) -> OrientedBox:
        return OrientedBox(self.trajectory.pose(i), self.length, self.width)

    def present_mask(self) -> np.ndarray:
        if self.present is None:
            return np.ones(len(self.trajectory), dtype=bool)
        return np.asarray(self.present, dtype=bool)


def horizon_index(h: float, dt: float, length: int) -> int:
    """Sample index whose timestamp equals horizon ``h`` (sample i is at (i+1)*dt)."""
    steps = h / dt
    n = int(round(steps))
    if n < 1 or abs(steps - n) > 1e-6:
        raise HorizonMismatch(f"horizon {h}s is not a positive multiple of dt={dt}")
    if n > length:
        raise HorizonMismatch(f"horizon {h}s needs {n} samples, trajectory has {length}")
    return n - 1


def _check_dt(a: Trajectory, b: Trajectory):
    if a.dt != b.dt:
        raise HorizonMismatch(f"dt mismatch: {a.dt} vs {b.dt}")


def l2_error(plan: Trajectory, gt: Trajectory, horizons: Sequence[float] = DEFAULT_HORIZONS) -> np.ndarray:
    """Displacement between plan and ground truth at each horizon timestamp."""
    _check_dt(plan, gt)
    out = []
    for h in horizons:
        i = horizon_index(h, plan.dt, min(len(plan), len(gt)))
        out.append(float(np.hypot(*(plan.positions[i] - gt.positions[i]))))
    return np.array(out)


def collision_flags(
    plan: Trajectory,
    agents: Sequence[BoxTrack],
    ego_dims: tuple[float, float] = DEFAULT_EGO_DIMS,
) -> np.ndarray:
    """Per-step flag: ego box along the plan overlaps some present agent box."""
    flags = np.zeros(len(plan), dtype=bool)
    for track in agents:
        _check_dt(plan, track.trajectory)
        present = track.present_mask()
        for i in range(min(len(plan), len(track.trajectory))):
            if flags[i] or not present[i]:
                continue
            ego = OrientedBox(plan.pose(i), *ego_dims)
            flags[i] = box_overlap(ego, track.box(i))
    return flags


def collision_rate(
    plan: Trajectory,
    agents: Sequence[BoxTrack],
    ego_dims: tuple[float, float] = DEFAULT_EGO_DIMS,
    horizons: Sequence[float] = DEFAULT_HORIZONS,
) -> np.ndarray:
    """1.0 at horizon h if any overlap occurs at or before h, else 0.0."""
    flags = collision_flags(plan, agents, ego_dims)
    return np.array([float(flags[: horizon_index(h, plan.dt, len(plan)) + 1].any()) for h in horizons])


def exposure_per_step(
    plan: Trajectory,
    agents: Sequence[BoxTrack],
    params: PreParams = PreParams(),
    risk_params: RiskParams = RiskParams(),
) -> np.ndarray:
    """Instantaneous exposure: worst exponential risk over present agents, 0 with none."""
    T = len(plan)
    phi = np.zeros(T)
    if not agents:
        return phi
    for track in agents:
        _check_dt(plan, track.trajectory)
        n = min(T, len(track.trajectory))
        p_rel = track.trajectory.positions[:n] - plan.positions[:n]
        v_rel = track.trajectory.velocities[:n] - plan.velocities[:n]
        d = np.hypot(p_rel[:, 0], p_rel[:, 1])
        t = np.atleast_1d(ttc(p_rel, v_rel, d, risk_params))
        value = np.exp(-t / params.tau) * np.exp(-d / params.pre_sigma)
        value = np.where(track.present_mask()[:n], value, 0.0)
        phi[:n] = np.maximum(phi[:n], value)
    return phi


def pre(
    plan: Trajectory,
    agents: Sequence[BoxTrack],
    params: PreParams = PreParams(),
    risk_params: RiskParams = RiskParams(),
) -> float:
    """Planning Risk Exposure: mean instantaneous exposure over the whole plan."""
    return float(exposure_per_step(plan, agents, params, risk_params).mean())


def pre_per_horizon(
    plan: Trajectory,
    agents: Sequence[BoxTrack],
    params: PreParams = PreParams(),
    risk_params: RiskParams = RiskParams(),
    horizons: Sequence[float] = DEFAULT_HORIZONS,
) -> np.ndarray:
    phi = exposure_per_step(plan, agents, params, risk_params)
    return np.array([phi[: horizon_index(h, plan.dt, len(plan)) + 1].mean() for h in horizons])


def tpc(
    plan_now: Trajectory,
    plan_prev: Trajectory,
    horizons: Sequence[float] = DEFAULT_HORIZONS,
    shift_steps: int = 1,
) -> np.ndarray:
    """Mean deviation between consecutive plans over their shared future window.

    ``plan_prev`` was made ``shift_steps`` samples earlier, so its sample
    ``i + shift_steps`` lines up with sample ``i`` of ``plan_now``. Each
    horizon averages the aligned samples up to that horizon (or up to the
    end of the overlap, whichever is first).
    """
    _check_dt(plan_now, plan_prev)
    n = min(len(plan_now), len(plan_prev) - shift_steps)
    if n < 1:
        raise NoOverlap("consecutive plans share no future samples")
    dev = np.linalg.norm(plan_now.positions[:n] - plan_prev.positions[shift_steps : shift_steps + n], axis=1)
    out = []
    for h in horizons:
        steps = int(round(h / plan_now.dt))
        if steps < 1:
            raise HorizonMismatch(f"horizon {h}s shorter than dt={plan_now.dt}")
        out.append(float(dev[: min(steps, n)].mean()))
    return np.array(out)


def _columns(values: Sequence[float], horizons: Sequence[float]) -> dict:
    cols = {f"{h:g}s": float(v) for h, v in zip(horizons, values)}
    cols["avg"] = math.fsum(float(v) for v in values) / len(values) if len(values) else 0.0
    return cols


@dataclass
class MetricsReport:
    """Per-horizon metric table plus the parameters it was computed with."""

    l2: dict
    collision: dict
    pre: dict
    tpc: dict | None = None
    frames: int = 1
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_table(self) -> str:
        keys = [k for k in self.l2 if k != "avg"] + ["avg"]
        rows = [("L2 (m)", self.l2, 1.0, "{:.3f}"), ("Col. Rate (%)", self.collision, 100.0, "{:.2f}"),
                ("PRE (%)", self.pre, 100.0, "{:.2f}")]
        if self.tpc is not None:
            rows.append(("TPC (m)", self.tpc, 1.0, "{:.3f}"))
        header = f"{'metric':<14}" + "".join(f"{('Avg.' if k == 'avg' else k):>9}" for k in keys)
        lines = [header, "-" * len(header)]
        for name, cols, scale, fmt in rows:
            lines.append(f"{name:<14}" + "".join(f"{fmt.format(cols[k] * scale):>9}" for k in keys))
        return "\n".join(lines) + "\n"


def evaluate_frame(
    plan: Trajectory,
    gt: Trajectory,
    agents: Sequence[BoxTrack],
    ego_dims: tuple[float, float] = DEFAULT_EGO_DIMS,
    horizons: Sequence[float] = DEFAULT_HORIZONS,
    pre_params: PreParams = PreParams(),
    risk_params: RiskParams = RiskParams(),
    prev_plan: Trajectory | None = None,
) -> MetricsReport:
    tpc_cols = None
    if prev_plan is not None:
        tpc_cols = _columns(tpc(plan, prev_plan, horizons), horizons)
    return MetricsReport(
        l2=_columns(l2_error(plan, gt, horizons), horizons),
        collision=_columns(collision_rate(plan, agents, ego_dims, horizons), horizons),
        pre=_columns(pre_per_horizon(plan, agents, pre_params, risk_params, horizons), horizons),
        tpc=tpc_cols,
        frames=1,
        params=report_params(ego_dims, horizons, pre_params, risk_params),
    )


def report_params(ego_dims, horizons, pre_params: PreParams, risk_params: RiskParams) -> dict:
    return {
        "ego_dims": [float(x) for x in ego_dims],
        "horizons": [float(h) for h in horizons],
        "pre": asdict(pre_params),
        "risk": asdict(risk_params),
    }


def aggregate(reports: Iterable[MetricsReport]) -> MetricsReport:
    """Unweighted mean over frames or scenarios, with compensated summation."""
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to aggregate")

    def mean_of(name: str) -> dict | None:
        tables = [t for t in (getattr(r, name) for r in reports) if t is not None]
        if not tables:
            return None
        return {k: math.fsum(t[k] for t in tables) / len(tables) for k in tables[0]}

    return MetricsReport(
        l2=mean_of("l2"),
        collision=mean_of("collision"),
        pre=mean_of("pre"),
        tpc=mean_of("tpc"),
        frames=sum(r.frames for r in reports),
        params=reports[0].params,
    )
