import math

import numpy as np
import pytest

from bipednav.keyframe import (
    DEFAULT_GAIT,
    Action,
    ApexState,
    InfeasibleTransitionError,
    PolicyConfig,
    PolicyGapError,
    TransitionSample,
    ViabilityMap,
    build_viability_map,
    evaluate_transition,
    is_viable,
    keyframe_policy,
    plan_rest_departure,
    plan_step,
    simulate_transition,
)
from oracles import rk4_step_transition

DTH = math.radians(22.5)
PITCH = 2.7 / 26


@pytest.fixture(scope="module")
def config():
    return PolicyConfig()


class TestPlanStep:
    def test_straight_nominal_mirrors_exactly(self, params):
        # equal apex velocities make the step symmetric about the switch
        plan = plan_step(0.4, 0.1, Action(d=0.4), 0.4, params)
        assert plan.delta_y2_n == pytest.approx(-0.1, abs=1e-12)
        assert plan.delta_y1_n == pytest.approx(-0.171621, abs=1e-5)
        assert plan.t1 == pytest.approx(plan.t2, abs=1e-12)

    def test_against_rk4_oracle_straight(self, params, omega):
        plan = plan_step(0.4, 0.1, Action(d=0.4), 0.4, params)
        dy1_o, dy2_o, t1_o, t2_o, foot_o = rk4_step_transition(0.4, 0.1, 0.4, 0.0, 0.4, omega)
        assert plan.delta_y1_n == pytest.approx(dy1_o, abs=1e-4)
        assert plan.delta_y2_n == pytest.approx(dy2_o, abs=1e-4)
        assert plan.foot_n_y == pytest.approx(foot_o, abs=1e-4)

    def test_against_rk4_oracle_steering(self, params, omega):
        plan = plan_step(0.25, 0.1, Action(d=0.3, delta_theta=DTH), 0.25, params)
        dy1_o, dy2_o, t1_o, t2_o, foot_o = rk4_step_transition(0.25, 0.1, 0.3, DTH, 0.25, omega)
        assert plan.delta_y1_n == pytest.approx(dy1_o, abs=1e-4)
        assert plan.delta_y2_n == pytest.approx(dy2_o, abs=1e-4)
        assert plan.t1 == pytest.approx(t1_o, abs=1e-4)
        assert plan.t2 == pytest.approx(t2_o, abs=1e-4)

    def test_perfect_lateral_mirror_with_zero_heading(self, params):
        # lateral dynamics is linear, so the mirrored offset is exact
        for dy2 in (0.03, 0.05, 0.08):
            plan = plan_step(0.3, dy2, Action(d=0.4), 0.3, params)
            assert plan.delta_y2_n == pytest.approx(-dy2, abs=1e-12)

    def test_unsafe_transition_raises(self, params):
        with pytest.raises(InfeasibleTransitionError):
            plan_step(0.1, 0.0, Action(d=0.1), 0.45, params)

    def test_stop_step_converges_over_foot(self, params):
        plan = plan_step(0.1, 0.018, Action(d=2 * PITCH, c_stop=True), 0.0, params)
        assert plan.t2 == math.inf
        assert plan.delta_y2_n == 0.0
        assert abs(plan.delta_y1_n) < 0.3


class TestSimulateTransition:
    def test_returns_offsets(self, params):
        dy1, dy2 = simulate_transition(ApexState(0.4), 0.1, Action(d=0.4), ApexState(0.4), params)
        assert dy2 == pytest.approx(-0.1, abs=1e-12)
        assert dy1 == pytest.approx(-0.171621, abs=1e-5)

    def test_steering_sample_lands_in_tracking_range(self, params, config):
        # mid-surface point of the steering transition map
        s = evaluate_transition(0.25, -0.05, Action(d=0.3, delta_theta=DTH), params, config)
        assert -0.3 <= s.delta_y1_n <= 0.3
        assert s.viable


class TestIsViable:
    def _sample(self, dy2_c, dy1_n, dy2_n, v_n=0.3):
        return TransitionSample(ApexState(0.3), dy2_c, Action(d=0.4),
                                ApexState(v_n), dy1_n, dy2_n, True)

    def test_nominal(self, config):
        assert is_viable(self._sample(0.05, -0.2, -0.05), config)

    def test_tracking_bound(self, config):
        assert not is_viable(self._sample(0.05, -0.35, -0.05), config)

    def test_safety_bound(self, config):
        assert not is_viable(self._sample(0.05, -0.2, -0.25), config)

    def test_sign_mismatch(self, config):
        assert not is_viable(self._sample(0.05, 0.2, -0.05), config)

    def test_no_alternation(self, config):
        assert not is_viable(self._sample(0.05, 0.2, 0.05), config)

    def test_rest_exemption(self, config):
        assert is_viable(self._sample(0.02, 0.1, 0.0, v_n=0.0), config)


class TestViabilityMap:
    def test_fig_surface_trends(self, params, config):
        # shorter steps and shallower turns admit more viable transitions
        actions = {
            (0.3, DTH): Action(d=0.3, delta_theta=DTH),
            (0.4, DTH): Action(d=0.4, delta_theta=DTH),
            (0.3, math.radians(45) - 1e-9): Action(d=0.3, delta_theta=math.radians(45) - 1e-9),
        }
        samples = build_viability_map(config, actions.values(), grid=30, params=params)
        counts = {}
        per = len(samples) // len(actions)
        for i, key in enumerate(actions):
            counts[key] = sum(1 for s in samples[i * per:(i + 1) * per] if s.viable)
        assert counts[(0.3, DTH)] > counts[(0.4, DTH)]
        assert counts[(0.3, DTH)] > counts[(0.3, math.radians(45) - 1e-9)]

    def test_all_viable_samples_in_ranges(self, params, config):
        samples = build_viability_map(config, [Action(d=0.3, delta_theta=DTH)],
                                      grid=25, params=params)
        for s in samples:
            if s.viable:
                assert -0.3 <= s.delta_y1_n <= 0.3
                assert -0.2 <= s.delta_y2_n <= 0.2

    def test_empty_action_set(self, params, config):
        assert build_viability_map(config, [], grid=10, params=params) == []

    def test_deterministic_ordering(self, params, config):
        a = [Action(d=0.3, delta_theta=DTH)]
        m1 = build_viability_map(config, a, grid=12, params=params)
        m2 = build_viability_map(config, a, grid=12, params=params)
        assert m1 == m2

    def test_lookup_matches_direct_evaluation(self, params, config):
        action = Action(d=4 * PITCH)
        vm = ViabilityMap(config, [action], params=params, v_step=0.05, dy2_step=0.02)
        for v, dy2 in [(0.2, 0.04), (0.2, -0.04), (0.1, 0.1), (0.3, 0.06)]:
            direct = evaluate_transition(v, dy2, action, params, config).viable
            assert vm.lookup(v, dy2, action) == direct


class TestKeyframePolicy:
    def test_straight_holds_velocity(self, params, config):
        s = keyframe_policy(ApexState(0.35), 0.02, Action(d=0.4), config=config, params=params)
        assert s.v_apex == 0.35

    def test_cruise_hold(self, params, config):
        s = keyframe_policy(ApexState(0.2), 0.0414, Action(d=4 * PITCH),
                            config=config, params=params)
        assert s.v_apex == 0.2

    def test_stop_ramp_halves_then_rests(self, params, config):
        a = Action(d=0.4, c_stop=True)
        s1 = keyframe_policy(ApexState(0.3), 0.05, a, config=config, params=params)
        assert s1.v_apex == pytest.approx(0.15)
        a2 = Action(d=2 * PITCH, c_stop=True)
        s2 = keyframe_policy(ApexState(0.1), 0.018, a2, config=config, params=params)
        assert s2.v_apex == 0.0

    def test_steering_mid_turn_speed(self, params, config):
        a = Action(d=2 * PITCH, delta_theta=DTH, i_st="left")
        s = keyframe_policy(ApexState(0.2), -0.0414, a, config=config, params=params,
                            next_action=Action(d=4 * PITCH, delta_theta=DTH))
        assert s.v_apex == pytest.approx(DEFAULT_GAIT.turn_v_mid)

    def test_steering_exit_returns_to_cruise(self, params, config):
        a = Action(d=4 * PITCH, delta_theta=DTH, i_st="right")
        s = keyframe_policy(ApexState(0.15), 0.0736, a, config=config, params=params,
                            next_action=Action(d=4 * PITCH))
        assert s.v_apex == pytest.approx(DEFAULT_GAIT.cruise_v)

    def test_terrain_following_height(self, params, config):
        s = keyframe_policy(ApexState(0.2, 1.0), 0.0414, Action(d=4 * PITCH, delta_z_foot=0.1),
                            config=config, params=params)
        assert s.z_apex == pytest.approx(1.1)

    def test_push_off_from_rest(self, params, config):
        s = keyframe_policy(ApexState(0.0), 0.02, Action(d=4 * PITCH),
                            config=config, params=params)
        assert s.v_apex == pytest.approx(DEFAULT_GAIT.launch_v)

    def test_policy_gap_raises(self, params, config):
        # steering demanded from rest is not executable
        with pytest.raises(PolicyGapError):
            keyframe_policy(ApexState(0.0), 0.02, Action(d=0.3, delta_theta=DTH),
                            config=config, params=params)

    def test_determinism(self, params, config):
        args = (ApexState(0.2), 0.0414, Action(d=4 * PITCH))
        a = keyframe_policy(*args, config=config, params=params)
        b = keyframe_policy(*args, config=config, params=params)
        assert a == b


class TestGaitSchedule:
    """Closed-loop chains of the schedule stay viable and periodic."""

    def test_cruise_steady_state(self, params, config):
        v, dy2 = 0.2, -0.0414
        for _ in range(6):
            s = evaluate_transition(v, dy2, Action(d=4 * PITCH), params, config)
            assert s.viable
            assert abs(s.delta_y2_n) == pytest.approx(abs(dy2), abs=1e-9)
            dy2 = s.delta_y2_n

    def test_turn_protocol_chain(self, params, config):
        # four-step left turn entered from the matching stance at cruise
        v, dy2 = 0.2, -0.0414
        v_targets = (0.15, 0.15, 0.15, 0.2)
        signs = []
        for dp, v_n in zip(DEFAULT_GAIT.turn_d_pitches, v_targets):
            s = evaluate_transition(v, dy2, Action(d=dp * PITCH, delta_theta=DTH),
                                    params, config, v_n=v_n)
            assert s.viable
            signs.append(math.copysign(1, s.delta_y2_n))
            v, dy2 = v_n, s.delta_y2_n
        # back near the cruise lateral offset, signs alternated throughout
        assert v == 0.2
        assert abs(dy2) == pytest.approx(0.0433, abs=5e-3)
        assert signs == [1, -1, 1, -1]
        s = evaluate_transition(v, dy2, Action(d=4 * PITCH), params, config)
        assert s.viable

    def test_restart_ramp(self, params, config):
        plan = plan_rest_departure(0.02, Action(d=4 * PITCH), 0.1, params)
        assert plan.verdict.safe
        v, dy2 = 0.1, plan.delta_y2_n
        for v_n in (0.15, 0.2):
            s = evaluate_transition(v, dy2, Action(d=4 * PITCH), params, config, v_n=v_n)
            assert s.viable
            v, dy2 = v_n, s.delta_y2_n
        assert abs(dy2) == pytest.approx(0.0414, abs=2e-3)

    def test_stop_chain(self, params, config):
        dy2 = 0.0414
        s = evaluate_transition(0.2, dy2, Action(d=2 * PITCH), params, config, v_n=0.1)
        assert s.viable
        plan = plan_step(0.1, s.delta_y2_n, Action(d=2 * PITCH, c_stop=True), 0.0, params)
        assert plan.verdict.safe
        assert abs(plan.delta_y1_n) <= 0.3
