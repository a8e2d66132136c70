import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from riskgame.geometry import Trajectory  # noqa: E402


def straight(speed=5.0, dt=0.5, T=6, y=0.0, x0=0.0):
    """Constant-velocity trajectory along +x."""
    pos = np.column_stack([x0 + speed * dt * np.arange(1, T + 1), np.full(T, y)])
    return Trajectory(dt, pos, np.zeros(T), np.tile([speed, 0.0], (T, 1)))


def random_trajectory(rng, T=6, dt=0.5, scale=10.0):
    pos = rng.uniform(-scale, scale, (T, 2))
    vel = rng.uniform(-5, 5, (T, 2))
    return Trajectory(dt, pos, rng.uniform(-np.pi, np.pi, T), vel)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
