import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import straight
from oracles import pre_loop
from riskgame.errors import HorizonMismatch, NoOverlap
from riskgame.geometry import Trajectory
from riskgame.metrics import (
    BoxTrack,
    MetricsReport,
    PreParams,
    aggregate,
    collision_rate,
    evaluate_frame,
    exposure_per_step,
    l2_error,
    pre,
    tpc,
)


def _static(x, y, T=6, dt=0.5):
    return Trajectory(dt, np.tile([x, y], (T, 1)), np.zeros(T), np.zeros((T, 2)))


def test_l2_identity_and_offset():
    plan = straight()
    np.testing.assert_array_equal(l2_error(plan, plan), [0, 0, 0])
    np.testing.assert_allclose(l2_error(plan.translated(0.5, 0), plan), [0.5, 0.5, 0.5])


def test_l2_diverging_pair():
    plan = straight()
    gt = Trajectory.from_positions(plan.positions + np.column_stack([np.zeros(6), np.arange(6) * 0.3]), 0.5)
    # samples at 1 s, 2 s, 3 s are indices 1, 3, 5
    np.testing.assert_allclose(l2_error(plan, gt), [0.3, 0.9, 1.5], atol=1e-12)


def test_horizon_mismatch():
    with pytest.raises(HorizonMismatch):
        l2_error(straight(T=4), straight(T=4), (1.0, 2.0, 3.0))
    with pytest.raises(HorizonMismatch):
        l2_error(straight(), straight(), (0.75,))


def test_collision_empty():
    np.testing.assert_array_equal(collision_rate(straight(), []), [0, 0, 0])


def test_collision_through_stationary_agent():
    # agent box spans x in [10.5, 14.5]; the ego's front (x + 2) first reaches it at 2 s
    flags = collision_rate(straight(), [BoxTrack(_static(12.5, 0.0), 4.0, 1.8)])
    np.testing.assert_array_equal(flags, [0, 1, 1])


def test_grazing_pass():
    gap = (1.8 + 1.8) / 2 + 0.01
    agent = BoxTrack(straight(y=gap), 4.0, 1.8)
    np.testing.assert_array_equal(collision_rate(straight(), [agent]), [0, 0, 0])
    touching = BoxTrack(straight(y=1.8), 4.0, 1.8)
    np.testing.assert_array_equal(collision_rate(straight(), [touching]), [1, 1, 1])


def test_absent_agent_ignored():
    track = BoxTrack(straight(), 4.0, 1.8, present=np.zeros(6, bool))
    np.testing.assert_array_equal(collision_rate(straight(), [track]), [0, 0, 0])


def test_pre_no_agents():
    assert pre(straight(), []) == 0


def test_pre_coincident():
    plan = _static(1.0, 1.0)
    assert pre(plan, [BoxTrack(_static(1.0, 1.0), 4.0, 1.8)]) >= 0.999


def test_pre_three_step_encounter():
    dt = 0.5
    plan = Trajectory(dt, [[1, 0], [2, 0], [3, 0]], [0, 0, 0], [[2, 0], [2, 0], [2, 0]])
    agent = Trajectory(dt, [[9, 1], [7, 1], [5, 0.5]], [math.pi] * 3, [[-4, 0], [-4, 0], [-4, -1]])
    # per step: d, closing speed, TTC, exp(-TTC/2) * exp(-d/8) written out by hand
    by_hand = []
    for (px, py), (vx, vy) in zip(agent.positions - plan.positions, agent.velocities - plan.velocities):
        d = math.sqrt(px * px + py * py)
        closing = max(0.0, -(px * vx + py * vy) / d)
        t = min(d / (closing + 1e-3), 8.0)
        by_hand.append(math.exp(-t / 2) * math.exp(-d / 8))
    expected = sum(by_hand) / 3
    assert pre(plan, [BoxTrack(agent, 4.0, 1.8)]) == pytest.approx(expected, abs=1e-12)
    assert pre(plan, [BoxTrack(agent, 4.0, 1.8)]) == pytest.approx(
        pre_loop(plan.positions, plan.velocities, [(agent.positions, agent.velocities)]), abs=1e-12
    )


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_pre_matches_loop(seed, K):
    rng = np.random.default_rng(seed)
    plan = Trajectory(0.5, rng.uniform(-10, 10, (6, 2)), np.zeros(6), rng.uniform(-5, 5, (6, 2)))
    agents = [Trajectory(0.5, rng.uniform(-10, 10, (6, 2)), np.zeros(6), rng.uniform(-5, 5, (6, 2))) for _ in range(K)]
    got = pre(plan, [BoxTrack(a, 4, 1.8) for a in agents])
    assert got == pytest.approx(pre_loop(plan.positions, plan.velocities, [(a.positions, a.velocities) for a in agents]), abs=1e-12)
    assert 0 <= got < 1


def test_exposure_per_step_uses_max_over_agents():
    plan = _static(0, 0)
    near, far = BoxTrack(_static(3, 0), 4, 1.8), BoxTrack(_static(30, 0), 4, 1.8)
    np.testing.assert_array_equal(exposure_per_step(plan, [near, far]), exposure_per_step(plan, [near]))


def test_tpc_cases():
    plan = straight()
    # the previous plan was made one step earlier, so it leads with one extra sample
    prev = Trajectory.from_positions(np.vstack([[0.0, 0.0], plan.positions]), 0.5)
    np.testing.assert_array_equal(tpc(plan, prev), [0, 0, 0])
    shifted = prev.translated(0, 0.1)
    np.testing.assert_allclose(tpc(plan, shifted), [0.1, 0.1, 0.1], atol=1e-12)


def test_tpc_hand_built_pair():
    now = Trajectory.from_positions([[1, 0], [2, 0], [3, 0], [4, 0]], 1.0)
    prev = Trajectory.from_positions([[0, 0], [1, 1], [2, 0], [3, 2], [4, 0]], 1.0)
    # aligned deviations: 1, 0, 2, 0
    np.testing.assert_allclose(tpc(now, prev, (1.0, 2.0, 3.0, 4.0)), [1.0, 0.5, 1.0, 0.75])


def test_tpc_no_overlap():
    with pytest.raises(NoOverlap):
        tpc(straight(T=3), straight(T=1))


def test_report_table_and_aggregate():
    plan = straight()
    r1 = evaluate_frame(plan, plan, [])
    r2 = evaluate_frame(plan.translated(1.0, 0), plan, [BoxTrack(plan, 4, 1.8)], prev_plan=plan)
    agg = aggregate([r1, r2])
    assert agg.frames == 2
    assert agg.l2["avg"] == pytest.approx(0.5)
    assert agg.collision["1s"] == 0.5
    assert agg.tpc == r2.tpc
    table = agg.to_table()
    assert "Avg." in table and "PRE (%)" in table
    assert MetricsReport(**agg.to_dict()).to_json() == agg.to_json()


def test_pre_params_validated():
    with pytest.raises(ValueError):
        PreParams(tau=0)
