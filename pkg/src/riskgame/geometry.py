"""Poses, trajectories, frame transforms and oriented boxes.

Trajectories are stored as numpy arrays rather than lists of pose objects;
``Trajectory.samples`` gives the per-sample view when one is needed.
Sample ``i`` of a trajectory is the state at time ``(i + 1) * dt`` after the
moment it was planned.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import EmptyTrajectory

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    wrapped = np.remainder(np.asarray(theta, dtype=float) + math.pi, TWO_PI) - math.pi
    # remainder maps onto [-pi, pi); flip the lower endpoint
    return np.where(wrapped <= -math.pi, wrapped + TWO_PI, wrapped)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Pose2:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError(f"non-finite pose {self!r}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def inverse(self) -> "Pose2":
        """Pose whose frame transform undoes the transform into this pose's frame."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        return Pose2(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.heading)

    def compose(self, local: "Pose2") -> "Pose2":
        """Express ``local`` (given in this pose's frame) in the parent frame."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        return Pose2(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
            self.heading + local.heading,
        )


@dataclass(frozen=True)
class Velocity2:
    vx: float
    vy: float

    def __post_init__(self):
        if not (math.isfinite(self.vx) and math.isfinite(self.vy)):
            raise ValueError(f"non-finite velocity {self!r}")
        object.__setattr__(self, "vx", float(self.vx))
        object.__setattr__(self, "vy", float(self.vy))

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


class Command(str, enum.Enum):
    GO_STRAIGHT = "go-straight"
    TURN_LEFT = "turn-left"
    TURN_RIGHT = "turn-right"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def finite_difference(positions: np.ndarray, dt: float) -> np.ndarray:
    """Forward differences with the trailing sample repeated; zeros when T == 1."""
    positions = np.asarray(positions, dtype=float)
    vel = np.zeros_like(positions)
    if len(positions) > 1:
        vel[:-1] = np.diff(positions, axis=0) / dt
        vel[-1] = vel[-2]
    return vel


def headings_from_velocities(velocities: np.ndarray, fallback: float = 0.0) -> np.ndarray:
    """Heading of motion per sample; stationary samples inherit the previous heading."""
    out = np.empty(len(velocities))
    last = fallback
    for i, (vx, vy) in enumerate(velocities):
        if math.hypot(vx, vy) > 1e-9:
            last = math.atan2(vy, vx)
        out[i] = last
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fixed-rate sequence of poses and velocities.

    Args:
        dt: sample period in seconds.
        positions: (T, 2) array of x, y in meters.
        headings: (T,) array of headings in radians, wrapped to (-pi, pi].
        velocities: (T, 2) array of vx, vy in m/s.
    """

    dt: float
    positions: np.ndarray
    headings: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        pos = _frozen(self.positions).reshape(-1, 2)
        if len(pos) == 0:
            raise EmptyTrajectory("trajectory needs at least one sample")
        hd = _frozen(wrap_angles(np.asarray(self.headings, dtype=float).reshape(-1)))
        vel = _frozen(self.velocities).reshape(-1, 2)
        if not (len(hd) == len(vel) == len(pos)):
            raise ValueError("positions, headings and velocities must have equal length")
        if not (np.isfinite(pos).all() and np.isfinite(hd).all() and np.isfinite(vel).all()):
            raise ValueError("trajectory samples must be finite")
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "headings", hd)
        object.__setattr__(self, "velocities", vel)

    @classmethod
    def from_positions(
        cls,
        positions,
        dt: float,
        headings=None,
        velocities=None,
        initial_heading: float = 0.0,
    ) -> "Trajectory":
        """Build a trajectory, finite-differencing whatever is not supplied."""
        pos = np.asarray(positions, dtype=float).reshape(-1, 2)
        vel = finite_difference(pos, dt) if velocities is None else np.asarray(velocities, dtype=float)
        if headings is None:
            headings = headings_from_velocities(vel, initial_heading)
        return cls(dt, pos, headings, vel)

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[Pose2, Velocity2]], dt: float) -> "Trajectory":
        pos = [(p.x, p.y) for p, _ in samples]
        hd = [p.heading for p, _ in samples]
        vel = [(v.vx, v.vy) for _, v in samples]
        return cls(dt, pos, hd, vel)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def horizon(self) -> int:
        return len(self.positions)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(1, len(self) + 1)

    @property
    def samples(self) -> Iterator[tuple[Pose2, Velocity2]]:
        for (x, y), h, (vx, vy) in zip(self.positions, self.headings, self.velocities):
            yield Pose2(x, y, h), Velocity2(vx, vy)

    def pose(self, i: int) -> Pose2:
        x, y = self.positions[i]
        return Pose2(x, y, self.headings[i])

    def velocity(self, i: int) -> Velocity2:
        vx, vy = self.velocities[i]
        return Velocity2(vx, vy)

    def slice(self, start: int, stop: int | None = None) -> "Trajectory":
        return Trajectory(
            self.dt,
            self.positions[start:stop],
            self.headings[start:stop],
            self.velocities[start:stop],
        )

    def translated(self, dx: float, dy: float) -> "Trajectory":
        return Trajectory(self.dt, self.positions + [dx, dy], self.headings, self.velocities)

    def allclose(self, other: "Trajectory", atol: float = 1e-9) -> bool:
        if len(self) != len(other) or self.dt != other.dt:
            return False
        dh = wrap_angles(self.headings - other.headings)
        return bool(
            np.allclose(self.positions, other.positions, rtol=0, atol=atol)
            and np.allclose(self.velocities, other.velocities, rtol=0, atol=atol)
            and np.all(np.abs(dh) <= atol)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.dt == other.dt
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.headings, other.headings)
            and np.array_equal(self.velocities, other.velocities)
        )

    __hash__ = None


def transform_to_frame(traj: Trajectory, frame: Pose2) -> Trajectory:
    """Express ``traj`` in the coordinate frame anchored at ``frame``.

    Positions are translated then rotated; velocities are only rotated.
    """
    rot_inv = rotation(-frame.heading)
    pos = (traj.positions - frame.xy) @ rot_inv.T
    vel = traj.velocities @ rot_inv.T
    return Trajectory(traj.dt, pos, wrap_angles(traj.headings - frame.heading), vel)


def transform_from_frame(traj: Trajectory, frame: Pose2) -> Trajectory:
    """Inverse of :func:`transform_to_frame`: local coordinates back to the parent frame."""
    rot = rotation(frame.heading)
    pos = traj.positions @ rot.T + frame.xy
    vel = traj.velocities @ rot.T
    return Trajectory(traj.dt, pos, wrap_angles(traj.headings + frame.heading), vel)


@dataclass(frozen=True)
class OrientedBox:
    center: Pose2
    length: float
    width: float

    def __post_init__(self):
        if not (self.width > 0 and self.length >= self.width and math.isfinite(self.length)):
            raise ValueError(f"box needs length >= width > 0, got {self.length} x {self.width}")

    def corners(self) -> np.ndarray:
        """(4, 2) corners, counter-clockwise."""
        hl, hw = 0.5 * self.length, 0.5 * self.width
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        return local @ rotation(self.center.heading).T + self.center.xy

    def axes(self) -> np.ndarray:
        c, s = math.cos(self.center.heading), math.sin(self.center.heading)
        return np.array([[c, s], [-s, c]])


def box_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """Separating-axis test for two oriented rectangles; touching counts as overlap."""
    ca, cb = a.corners(), b.corners()
    for axis in np.vstack([a.axes(), b.axes()]):
        pa = ca @ axis
        pb = cb @ axis
        if pa.max() < pb.min() or pb.max() < pa.min():
            return False
    return True
