import math

import numpy as np
import pytest

from compile_imitation.constants import COMMAND_LEVELS, NUM_REACHER_ACTIONS, REACHER_OBS_DIM
from compile_imitation.envs import reacher
from compile_imitation.envs.reacher import ReacherState, ReacherTarget
from compile_imitation.envs.tasks import EventKind, TaskKind, TaskSpec
from compile_imitation.utils.error_helpers import ConfigError, ResampleError


@pytest.mark.parametrize(
    "theta,expected",
    [((0.0, 0.0), (0.24, 0.0)), ((math.pi / 2, 0.0), (0.0, 0.24)), ((0.0, math.pi), (0.0, 0.0))],
)
def test_fingertip_examples(theta, expected):
    x, y = reacher.fingertip(theta)
    assert x == pytest.approx(expected[0], abs=1e-12)
    assert y == pytest.approx(expected[1], abs=1e-12)


def test_fingertip_matches_complex_exponential():
    rng = np.random.default_rng(0)
    for t1, t2 in rng.uniform(-10, 10, size=(200, 2)):
        tip = 0.12 * np.exp(1j * t1) + 0.12 * np.exp(1j * (t1 + t2))
        x, y = reacher.fingertip((t1, t2))
        assert x == pytest.approx(tip.real, abs=1e-12)
        assert y == pytest.approx(tip.imag, abs=1e-12)


@pytest.mark.parametrize("angle", [-0.1, 0.0, 2 * math.pi, 7.0, -13.0, -1e-18])
def test_wrap_angle_range(angle):
    wrapped = reacher.wrap_angle(angle)
    assert 0.0 <= wrapped < 2 * math.pi
    assert math.cos(wrapped) == pytest.approx(math.cos(angle))


def single_target_state(theta, target_xy, object_type=3):
    target = ReacherTarget(object_type, *target_xy)
    return ReacherState(theta=theta, targets=(target,), tasks=(TaskSpec(TaskKind.REACH, object_type),))


def test_zero_action_keeps_angles():
    state = single_target_state((1.0, 2.0), (0.0, -0.15))
    nxt, event = reacher.step(state, (0.0, 0.0))
    assert nxt.theta == pytest.approx((1.0, 2.0))
    assert event.kind == EventKind.NONE
    assert nxt.step_count == 1


def test_step_angle_change_is_bounded():
    state = single_target_state((1.0, 2.0), (0.0, -0.15))
    nxt, _ = reacher.step(state, (5.0, -5.0))
    assert nxt.theta[0] == pytest.approx(1.3)
    assert nxt.theta[1] == pytest.approx(1.7)


def test_reach_hides_target_and_keeps_coordinates():
    state = single_target_state((0.0, 0.0), (0.24, 0.01))
    nxt, event = reacher.step(state, (0.0, 0.0))
    assert event.kind == EventKind.REACHED and event.object_type == 3 and event.advanced
    assert nxt.done
    obs = reacher.observe(nxt)
    assert obs[9] == 0.0
    assert obs[10] == pytest.approx(0.24)
    assert obs[11] == pytest.approx(0.01)

    again, event = reacher.step(nxt, (0.0, 0.0))
    assert event.kind == EventKind.NONE
    assert again.task_index == 1


def test_observe_layout():
    state = reacher.generate_instance(4, 3)
    obs = reacher.observe(state)
    assert obs.shape == (REACHER_OBS_DIM,)
    present = {t.object_type for t in state.targets}
    for k in range(10):
        assert obs[3 * k] == (1.0 if k in present else 0.0)
        if k not in present:
            assert obs[3 * k + 1] == 0.0 and obs[3 * k + 2] == 0.0
    assert tuple(obs[-2:]) == pytest.approx(state.theta)


def test_generate_instance_contract():
    state = reacher.generate_instance(11, 3)
    assert len(state.tasks) == 3
    assert all(t.kind == TaskKind.REACH for t in state.tasks)
    types = [t.object_type for t in state.targets]
    assert len(types) == len(set(types))
    assert all(0.05 <= t.radius <= 0.2 for t in state.targets)
    assert all(state.target_of(t.object_type) is not None for t in state.tasks)
    assert reacher.generate_instance(11, 3) == state


def test_generate_instance_rejects_bad_task_count():
    with pytest.raises(ConfigError):
        reacher.generate_instance(0, 6)


def test_controller_rests_when_aligned():
    tip = reacher.fingertip((0.3, 1.1))
    state = single_target_state((0.3, 1.1), tip)
    assert reacher.scripted_action(state) == (0.0, 0.0)


def test_controller_full_shoulder_for_opposite_target():
    tip_x, tip_y = reacher.fingertip((0.0, 1.0))
    state = single_target_state((0.0, 1.0), (-tip_x, -tip_y))
    shoulder, _ = reacher.scripted_action(state)
    assert abs(shoulder) == 1.0


def test_controller_success_rate():
    solved = 0
    for seed in range(500):
        state = reacher.generate_instance(seed, 3)
        for _ in range(100):
            if state.done:
                break
            state, _ = reacher.step(state, reacher.scripted_action(state))
        solved += state.done
    assert solved / 500 >= 0.95


def test_demo_boundaries_follow_reached_events():
    state = reacher.generate_instance(2, 3)
    try:
        actions, boundaries = reacher.generate_demo(state)
    except ResampleError:
        pytest.skip("canonical instance needs a resample")
    states, events = reacher.replay(state, actions)
    reached = [t for t, e in enumerate(events, start=1) if e.kind == EventKind.REACHED]
    assert len(reached) == 3
    assert boundaries == [t + 1 for t in reached[:-1]]
    assert reached[-1] == len(actions)
    assert states[-1].done


def test_action_ids_cover_command_grid():
    ids = {reacher.action_to_id((a, b)) for a in COMMAND_LEVELS for b in COMMAND_LEVELS}
    assert ids == set(range(NUM_REACHER_ACTIONS))
    for action_id in range(NUM_REACHER_ACTIONS):
        assert reacher.action_to_id(reacher.id_to_action(action_id)) == action_id
    assert reacher.id_to_action(reacher.action_to_id((0.0, 0.0))) == (0.0, 0.0)
