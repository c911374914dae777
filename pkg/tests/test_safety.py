import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipednav.keyframe import Action, ApexState
from bipednav.safety import (
    IllPosedSteeringError,
    InfeasibleSteeringGeometryError,
    SafetyRule,
    SteeringGeometry,
    check_balancing_safety,
    steering_apex_bounds,
    steering_consecutive_bounds,
    straight_consecutive_bounds,
)

DTH = math.radians(22.5)


class TestSteeringApexBounds:
    def test_reference_window(self, omega):
        lo, hi = steering_apex_bounds(SteeringGeometry(0.15, DTH, 0.3), omega)
        assert lo == pytest.approx(0.19460, abs=1e-5)
        assert hi == pytest.approx(1.13423, abs=1e-5)

    def test_straight_limit(self, omega):
        lo, hi = steering_apex_bounds(SteeringGeometry(0.15, 0.0, 0.4), omega)
        assert lo == 0.0 and hi == math.inf

    def test_degenerate_offset_pins_zero(self, omega):
        lo, hi = steering_apex_bounds(SteeringGeometry(0.0, DTH, 0.3), omega)
        assert (lo, hi) == (0.0, 0.0)

    def test_inconsistent_signs_rejected(self, omega):
        with pytest.raises(IllPosedSteeringError):
            steering_apex_bounds(SteeringGeometry(-0.1, DTH, 0.3), omega)

    def test_boundary_velocities_against_rollout(self, omega):
        # at the lower bound the sagittal first integral in the turned frame
        # vanishes; at the upper bound the lateral one does
        dy2 = 0.15
        lo, hi = steering_apex_bounds(SteeringGeometry(dy2, DTH, 0.3), omega)
        c, s = math.cos(DTH), math.sin(DTH)
        ex = (lo * c) ** 2 - omega**2 * (dy2 * s) ** 2
        el = (hi * s) ** 2 - omega**2 * (dy2 * c) ** 2
        assert ex == pytest.approx(0.0, abs=1e-12)
        assert el == pytest.approx(0.0, abs=1e-12)


class TestStraightConsecutiveBounds:
    def test_reference_window(self, omega):
        lo, hi = straight_consecutive_bounds(0.4, 0.4, omega)
        assert lo == 0.0
        assert hi == pytest.approx(0.16 + 9.81 * 0.16, abs=1e-12)
        assert math.sqrt(hi) == pytest.approx(1.31514, abs=1e-5)

    def test_equal_velocities_always_admissible(self, omega):
        for d in (0.05, 0.2, 0.5):
            lo, hi = straight_consecutive_bounds(0.37, d, omega)
            assert lo <= 0.37**2 <= hi

    def test_interval_collapses_with_step_length(self, omega):
        lo, hi = straight_consecutive_bounds(0.3, 1e-9, omega)
        assert lo == pytest.approx(0.09, abs=1e-12)
        assert hi == pytest.approx(0.09, abs=1e-12)

    def test_window_is_switch_in_range_exactly(self, omega):
        # admissible v_n are exactly those whose switch lies between the apexes
        from bipednav.pendulum import switching_position
        v_c, d = 0.4, 0.4
        lo, hi = straight_consecutive_bounds(v_c, d, omega)
        for vn_sq in np.linspace(0.0, hi * 1.4, 300):
            v_n = math.sqrt(vn_sq)
            x_sw = switching_position(0.0, d, 0.0, d, v_c, v_n, omega)
            inside = -1e-12 <= x_sw <= d + 1e-12
            assert inside == (lo - 1e-12 <= vn_sq <= hi + 1e-12)


class TestSteeringConsecutiveBounds:
    def test_reference_upper(self, omega):
        lo, hi = steering_consecutive_bounds(0.3, SteeringGeometry(0.1, DTH, 0.3), omega)
        assert hi == pytest.approx(1.18497, abs=2e-5)
        assert math.sqrt(hi) == pytest.approx(1.08856, abs=1e-5)

    def test_reduces_to_straight(self, omega):
        g = SteeringGeometry(0.12, 0.0, 0.35)
        assert steering_consecutive_bounds(0.28, g, omega) == \
            straight_consecutive_bounds(0.28, 0.35, omega)

    def test_zero_offset_uses_projected_velocity(self, omega):
        g = SteeringGeometry(0.0, DTH, 0.3)
        lo, hi = steering_consecutive_bounds(0.3, g, omega)
        lo_s, hi_s = straight_consecutive_bounds(0.3 * math.cos(DTH), 0.3, omega)
        assert (lo, hi) == (lo_s, hi_s)

    def test_negative_effective_length(self, omega):
        g = SteeringGeometry(-0.45, math.radians(45) - 1e-9, 0.3)
        with pytest.raises(InfeasibleSteeringGeometryError):
            steering_consecutive_bounds(0.2, g, omega)


class TestCheckBalancingSafety:
    def test_nominal_straight_is_safe(self, omega):
        a = Action(d=0.4)
        v = check_balancing_safety(ApexState(0.4), a, ApexState(0.4),
                                   SteeringGeometry(0.1, 0.0, 0.4), omega)
        assert v.safe and v.violated_rule is SafetyRule.NONE and v.margin > 0

    def test_above_upper_steering_bound(self, omega):
        g = SteeringGeometry(0.15, DTH, 0.3)
        _, hi = steering_apex_bounds(g, omega)
        bad = hi + 0.05
        v = check_balancing_safety(bad, Action(d=0.3, delta_theta=DTH), 0.3, g, omega)
        assert not v.safe and v.violated_rule is SafetyRule.STEER_APEX_HIGH
        assert v.margin == pytest.approx(hi - bad, abs=1e-12)

    def test_below_lower_steering_bound(self, omega):
        g = SteeringGeometry(0.15, DTH, 0.3)
        lo, _ = steering_apex_bounds(g, omega)
        bad = lo - 0.05
        v = check_balancing_safety(bad, Action(d=0.3, delta_theta=DTH), 0.25, g, omega)
        assert not v.safe and v.violated_rule is SafetyRule.STEER_APEX_LOW
        assert v.margin == pytest.approx(bad - lo, abs=1e-12)

    def test_consecutive_violation_reported(self, omega):
        g = SteeringGeometry(0.0, 0.0, 0.1)
        v = check_balancing_safety(0.1, Action(d=0.1), 0.45, g, omega)
        assert not v.safe and v.violated_rule is SafetyRule.CONSEC_HIGH

    def test_mirror_symmetry_of_verdicts(self, omega):
        rng = np.random.default_rng(3)
        for _ in range(200):
            dy2 = rng.uniform(-0.2, 0.2)
            dth = rng.choice([-DTH, 0.0, DTH])
            d = rng.uniform(0.2, 0.5)
            v_c = rng.uniform(0.0, 0.45)
            v_n = rng.uniform(0.0, 0.45)
            g = SteeringGeometry(dy2, dth, d)
            a = check_balancing_safety(v_c, Action(d=d, delta_theta=dth), v_n, g, omega)
            b = check_balancing_safety(v_c, Action(d=d, delta_theta=-dth), v_n,
                                       g.mirrored(), omega)
            assert a == b

    def test_steering_window_never_widens_with_angle(self, omega):
        dy2 = 0.12
        widths = []
        for deg in (10.0, 22.5, 30.0, 45.0):
            t = math.radians(deg)
            lo, hi = steering_apex_bounds(SteeringGeometry(dy2, t, 0.3), omega)
            widths.append(hi - lo)
        assert all(w1 >= w2 - 1e-12 for w1, w2 in zip(widths, widths[1:]))

    @given(st.floats(0.01, 0.2), st.floats(0.05, 0.44), st.floats(0.2, 0.5))
    @settings(max_examples=60, deadline=None)
    def test_zero_angle_matches_straight_bitwise(self, dy2, v_c, d):
        w = 3.1320919526731648
        g = SteeringGeometry(dy2, 0.0, d)
        v1 = check_balancing_safety(v_c, Action(d=d), v_c, g, w)
        lo, hi = straight_consecutive_bounds(v_c, d, w)
        assert v1.safe == (lo <= v_c**2 <= hi)
