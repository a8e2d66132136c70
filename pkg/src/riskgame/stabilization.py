"""Command-gated temporal consistency against previously selected plans."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import EmptyTrajectory
from .geometry import Command, Pose2, Trajectory, transform_to_frame

TIME_TOL = 1e-9


def _points(x) -> np.ndarray:
    pts = x.positions if isinstance(x, Trajectory) else np.asarray(x, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptyTrajectory("hausdorff distance needs non-empty point sets")
    return pts


def directed_hausdorff(a, b) -> float:
    """Largest distance from a point of ``a`` to its nearest point of ``b``."""
    return float(cdist(_points(a), _points(b)).min(axis=1).max())


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between the sample positions of two trajectories."""
    d = cdist(_points(a), _points(b))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def mean_pointwise(a, b) -> float:
    """Mean distance between index-aligned samples over the shorter length."""
    pa, pb = _points(a), _points(b)
    n = min(len(pa), len(pb))
    return float(np.linalg.norm(pa[:n] - pb[:n], axis=1).mean())


DISTANCES = {"hausdorff": hausdorff, "euclidean": mean_pointwise}


@dataclass(frozen=True, eq=False)
class HistoryEntry:
    trajectory: Trajectory  # world frame
    command: Command
    ego_pose: Pose2
    time: float = 0.0  # when the plan was made; sample i is at time + (i + 1) * dt


@dataclass(frozen=True, eq=False)
class HistoryBuffer:
    """Newest-last ring of selected plans. Capacity 0 disables history."""

    capacity: int = 3
    entries: tuple[HistoryEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError(f"capacity must be >= 0, got {self.capacity}")
        object.__setattr__(self, "entries", tuple(self.entries)[-self.capacity :] if self.capacity else ())

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def newest(self) -> HistoryEntry | None:
        return self.entries[-1] if self.entries else None

    def cleared(self) -> "HistoryBuffer":
        return HistoryBuffer(self.capacity)


def push_history(
    buffer: HistoryBuffer,
    selected: Trajectory,
    command: Command,
    ego_pose: Pose2,
    time: float = 0.0,
) -> HistoryBuffer:
    """Append a selection, evicting the oldest entry beyond capacity."""
    entry = HistoryEntry(selected, Command(command), ego_pose, float(time))
    return HistoryBuffer(buffer.capacity, buffer.entries + (entry,))


def gate_open(buffer: HistoryBuffer, current_command: Command) -> bool:
    newest = buffer.newest
    return newest is not None and newest.command == Command(current_command)


def _overlap(candidate: Trajectory, history: Trajectory, hist_time: float, now: float):
    """Parts of candidate and history inside the shared window (now, hist_end]."""
    hist_keep = hist_time + history.times > now + TIME_TOL
    hist_end = hist_time + history.times[-1]
    cand_keep = now + candidate.times <= hist_end + TIME_TOL
    return candidate.positions[cand_keep], history.positions[hist_keep]


@dataclass(frozen=True, eq=False)
class ConsistencyScores:
    scores: np.ndarray
    gate_open: bool


def consistency_scores(
    candidates: Sequence[Trajectory],
    buffer: HistoryBuffer,
    current_command: Command,
    current_pose: Pose2,
    current_time: float | None = None,
    distance: str = "hausdorff",
) -> ConsistencyScores:
    """Mean distance from each candidate (current ego frame) to the buffered plans.

    Zero scores with ``gate_open=False`` when the buffer is empty or the
    newest entry was chosen under a different command; the caller is then
    expected to flush the buffer. With ``current_time`` given, each pair is
    compared only over the future window both trajectories cover; entries with
    no overlap are skipped.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    P = len(candidates)
    if not gate_open(buffer, current_command):
        return ConsistencyScores(np.zeros(P), False)
    metric = DISTANCES[distance]
    history = [(transform_to_frame(e.trajectory, current_pose), e.time) for e in buffer.entries]
    scores = np.zeros(P)
    for p, cand in enumerate(candidates):
        dists = []
        for hist, t_hist in history:
            if current_time is None:
                a, b = cand.positions, hist.positions
            else:
                a, b = _overlap(cand, hist, t_hist, current_time)
                if len(a) == 0 or len(b) == 0:
                    continue
            dists.append(metric(a, b))
        scores[p] = float(np.mean(dists)) if dists else 0.0
    return ConsistencyScores(scores, True)
