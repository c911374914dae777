"""Keyframe transition simulation, viability sampling, and the step policy.

A keyframe is the apex of a walking step.  Given the current apex state, the
signed lateral apex-to-foot offset, a commanded action (step length, heading
change, step height, stance, stop flag) and a candidate next apex velocity,
the transition is fully determined: the support switch comes from velocity
continuity of the two sagittal orbits, and the next lateral foot placement is
the unique one that makes the lateral apex coincide in time with the sagittal
one.  Viability additionally bounds the waypoint-tracking offset Δy1 and the
safety offset Δy2 and requires their signs to match and alternate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .pendulum import (
    PendulumParams,
    UnreachableStateError,
    coefficients,
    evaluate,
    switching_position,
    time_to_position,
    velocity_at,
)
from .safety import SafetyVerdict, SteeringGeometry, check_balancing_safety

TURN_INCREMENT = math.radians(22.5)

# step-length classes (m): small / medium / large
D_SMALL = (0.2, 0.3)
D_MEDIUM = (0.3, 0.4)
D_LARGE = (0.4, 0.5)
# apex-velocity classes (m/s)
V_SMALL = (0.1, 0.3)
V_MEDIUM = (0.3, 0.4)
V_LARGE = (0.4, 0.45)


class InfeasibleTransitionError(ValueError):
    """No lateral foot placement achieves apex simultaneity for this step."""


class PolicyGapError(RuntimeError):
    """The policy found no viable next apex state for the commanded action."""


@dataclass(frozen=True)
class Action:
    """Task-level step command."""

    d: float  # step length (m), quantized to the fine-grid pitch
    delta_theta: float = 0.0  # heading change (rad): one of {-22.5deg, 0, +22.5deg}
    delta_z_foot: float = 0.0  # foot height change (m): {-0.2,-0.1,0,0.1,0.2}
    i_st: str = "right"  # stance during this step: left | right | both
    c_stop: bool = False

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("step length must be positive")
        if self.i_st not in ("left", "right", "both"):
            raise ValueError(f"bad stance {self.i_st!r}")


@dataclass(frozen=True)
class ApexState:
    v_apex: float  # sagittal apex velocity (m/s)
    z_apex: float = 1.0  # absolute apex CoM height (m)

    def __post_init__(self):
        if not (-1e-12 <= self.v_apex <= 0.45 + 1e-12):
            raise ValueError(f"apex velocity {self.v_apex} outside [0, 0.45]")


@dataclass(frozen=True)
class KeyframeState:
    action: Action
    apex: ApexState


@dataclass(frozen=True)
class TransitionSample:
    s_c: ApexState
    delta_y2_c: float
    action: Action
    s_n: ApexState
    delta_y1_n: float
    delta_y2_n: float
    viable: bool


@dataclass(frozen=True)
class PolicyConfig:
    v_small: tuple[float, float] = V_SMALL
    v_medium: tuple[float, float] = V_MEDIUM
    v_large: tuple[float, float] = V_LARGE
    v_granularity: float = 0.05
    d_small: tuple[float, float] = D_SMALL
    d_medium: tuple[float, float] = D_MEDIUM
    d_large: tuple[float, float] = D_LARGE
    d_straight: float = 0.4
    dy1_range: tuple[float, float] = (-0.3, 0.3)
    dy2_range: tuple[float, float] = (-0.2, 0.2)
    stance_half_width: float = 0.05  # lateral CoM-to-foot seed when standing


@dataclass(frozen=True)
class StepPlan:
    """Fully solved single-step transition, in the post-turn local frame.

    The frame has the current stance foot at the origin and the new heading
    along +x.  Stop steps (v_n == 0) have an infinite second phase; their
    t2 is math.inf and final offsets are the converged limits.
    """

    x0: float
    y0: float
    vx0: float
    vy0: float
    x_switch: float
    v_switch: float
    t1: float
    t2: float
    x_apex_n: float
    y_apex_n: float
    foot_n_x: float
    foot_n_y: float
    delta_y1_n: float
    delta_y2_n: float
    verdict: SafetyVerdict


def reframed_apex(v_c: float, delta_y2_c: float, delta_theta: float):
    """Current apex state in the post-turn frame, stance foot at the origin."""
    c, s = math.cos(delta_theta), math.sin(delta_theta)
    return (delta_y2_c * s, delta_y2_c * c, v_c * c, -v_c * s)


def plan_step(v_c: float, delta_y2_c: float, action: Action, v_n: float,
              params: PendulumParams, check_safety: bool = True) -> StepPlan:
    """Solve one keyframe-to-keyframe transition.

    Raises InfeasibleTransitionError when the switch falls outside the apex
    interval or a phase is dynamically unreachable.  When check_safety is set
    the balancing verdict is computed first and an unsafe transition raises.
    """
    w = params.omega
    geom = SteeringGeometry(delta_y2_c, action.delta_theta, action.d)
    verdict = check_balancing_safety(v_c, action, v_n, geom, w)
    if check_safety and not verdict.safe:
        raise InfeasibleTransitionError(
            f"transition violates {verdict.violated_rule.value} by {verdict.margin:.4f}")

    x0, y0, vx0, vy0 = reframed_apex(v_c, delta_y2_c, action.delta_theta)
    x_apex_n = x0 + action.d
    foot_n_x = x_apex_n

    x_sw = switching_position(x0, x_apex_n, 0.0, foot_n_x, vx0, v_n, w)
    tol = 1e-9
    if not (x0 - tol <= x_sw <= x_apex_n + tol):
        raise InfeasibleTransitionError(
            f"switch at {x_sw:.4f} outside apex interval [{x0:.4f}, {x_apex_n:.4f}]")
    x_sw = min(max(x_sw, x0), x_apex_n)

    v_sw = velocity_at(x_sw, x0, vx0, 0.0, w, 1)
    t1 = time_to_position(x_sw, x0, vx0, 0.0, w) if x_sw > x0 else 0.0

    # lateral through phase 1 under the current foot
    ay, by = coefficients(y0, vy0, 0.0, w)
    y_sw, vy_sw = evaluate(ay, by, 0.0, w, t1)
    y_sw, vy_sw = float(y_sw), float(vy_sw)

    if v_n == 0.0:
        # stopping step: CoM converges to rest exactly over the next foot
        t2 = math.inf
        foot_n_y = y_sw + vy_sw / w
        y_n = foot_n_y
        dy2_n = 0.0
    else:
        t2 = time_to_position(foot_n_x, x_sw, v_sw, foot_n_x, w)
        # apex simultaneity is linear in the lateral foot offset:
        # vy(t2) = w sinh(w t2) (y_sw - y_f) + cosh(w t2) vy_sw = 0
        th = math.tanh(w * t2)
        if th <= 0.0:
            raise InfeasibleTransitionError("degenerate second phase, t2 <= 0")
        foot_n_y = y_sw + vy_sw / (w * th)
        a2, b2 = coefficients(y_sw, vy_sw, foot_n_y, w)
        y_n, vy_n = evaluate(a2, b2, foot_n_y, w, t2)
        y_n = float(y_n)
        dy2_n = y_n - foot_n_y

    dy1_n = y0 - y_n  # waypoint (lateral reference through the current apex) minus next apex
    return StepPlan(x0, y0, vx0, vy0, x_sw, v_sw, t1, t2, x_apex_n, y_n,
                    foot_n_x, foot_n_y, dy1_n, dy2_n, verdict)


def simulate_transition(s_c: ApexState, delta_y2_c: float, action: Action,
                        s_n_candidate: ApexState,
                        params: PendulumParams | None = None) -> tuple[float, float]:
    """Next-step tracking and safety offsets (Δy1_n, Δy2_n) for a transition."""
    params = params or PendulumParams()
    plan = plan_step(s_c.v_apex, delta_y2_c, action, s_n_candidate.v_apex, params)
    return plan.delta_y1_n, plan.delta_y2_n


def is_viable(sample: TransitionSample, config: PolicyConfig | None = None) -> bool:
    """Viability: safety, offset ranges, matching and alternating signs.

    A transition into rest (v_apex = 0, lateral offset converged to zero) is
    exempt from the sign rules; the oscillation it would constrain ends there.
    """
    config = config or PolicyConfig()
    if math.isnan(sample.delta_y1_n) or math.isnan(sample.delta_y2_n):
        return False
    lo1, hi1 = config.dy1_range
    lo2, hi2 = config.dy2_range
    if not (lo1 <= sample.delta_y1_n <= hi1 and lo2 <= sample.delta_y2_n <= hi2):
        return False
    eps = 1e-9
    if sample.s_n.v_apex == 0.0 and abs(sample.delta_y2_n) < eps:
        return True
    if sample.delta_y1_n * sample.delta_y2_n <= 0.0:
        return False  # tracking and safety offsets must share a sign
    if abs(sample.delta_y2_c) > eps and sample.delta_y2_n * sample.delta_y2_c >= 0.0:
        return False  # sign must alternate across the step
    return True


def evaluate_transition(v: float, dy2_c: float, action: Action,
                        params: PendulumParams,
                        config: PolicyConfig, v_n: float | None = None) -> TransitionSample:
    """One viability-map sample; infeasible transitions come back non-viable."""
    v_n = v if v_n is None else v_n
    s_c = ApexState(min(v, 0.45))
    s_n = ApexState(min(v_n, 0.45))
    try:
        plan = plan_step(v, dy2_c, action, v_n, params, check_safety=True)
    except (InfeasibleTransitionError, UnreachableStateError, ValueError):
        return TransitionSample(s_c, dy2_c, action, s_n, math.nan, math.nan, False)
    sample = TransitionSample(s_c, dy2_c, action, s_n,
                              plan.delta_y1_n, plan.delta_y2_n, True)
    return replace(sample, viable=is_viable(sample, config))


def build_viability_map(config: PolicyConfig, actions, grid: int = 60,
                        params: PendulumParams | None = None,
                        v_window: tuple[float, float] = (0.0, 0.6),
                        dy2_window: tuple[float, float] = (-0.25, 0.25)) -> list[TransitionSample]:
    """Sample the keyframe transition map over (v_apex, Δy2_c) per action.

    v_apex,c and v_apex,n are held equal, matching how the transition surfaces
    are usually visualized.  Output ordering is deterministic: actions in the
    given order, then row-major over the grid.
    """
    if grid <= 0:
        raise ValueError("grid resolution must be positive")
    params = params or PendulumParams()
    vs = np.linspace(v_window[0], v_window[1], grid)
    dy2s = np.linspace(dy2_window[0], dy2_window[1], grid)
    samples = []
    for action in actions:
        for v in vs:
            if v > 0.45:  # apex velocities beyond the policy ceiling are never viable
                samples.extend(
                    TransitionSample(ApexState(0.45), float(dy2), action, ApexState(0.45),
                                     math.nan, math.nan, False)
                    for dy2 in dy2s)
                continue
            for dy2 in dy2s:
                samples.append(evaluate_transition(float(v), float(dy2), action, params, config))
    return samples


class ViabilityMap:
    """Dense nearest-cell lookup over the sampled transition map."""

    def __init__(self, config: PolicyConfig, actions,
                 params: PendulumParams | None = None,
                 v_step: float = 0.01, dy2_step: float = 0.01,
                 v_window: tuple[float, float] = (0.0, 0.45),
                 dy2_window: tuple[float, float] = (-0.25, 0.25)):
        self.config = config
        self.params = params or PendulumParams()
        self.v_axis = np.arange(v_window[0], v_window[1] + v_step / 2, v_step)
        self.dy2_axis = np.arange(dy2_window[0], dy2_window[1] + dy2_step / 2, dy2_step)
        self._grids: dict[tuple, np.ndarray] = {}
        for action in actions:
            key = self._action_key(action)
            g = np.zeros((len(self.v_axis), len(self.dy2_axis)), dtype=bool)
            for i, v in enumerate(self.v_axis):
                for j, dy2 in enumerate(self.dy2_axis):
                    g[i, j] = evaluate_transition(
                        float(v), float(dy2), action, self.params, self.config).viable
            self._grids[key] = g

    @staticmethod
    def _action_key(action: Action) -> tuple:
        return (round(action.d, 6), round(action.delta_theta, 6))

    def lookup(self, v: float, dy2_c: float, action: Action) -> bool:
        key = self._action_key(action)
        if key not in self._grids:
            raise KeyError(f"action {key} not in the sampled map")
        i = int(np.clip(np.searchsorted(self.v_axis, v), 0, len(self.v_axis) - 1))
        if i > 0 and abs(self.v_axis[i - 1] - v) < abs(self.v_axis[i] - v):
            i -= 1
        j = int(np.clip(np.searchsorted(self.dy2_axis, dy2_c), 0, len(self.dy2_axis) - 1))
        if j > 0 and abs(self.dy2_axis[j - 1] - dy2_c) < abs(self.dy2_axis[j] - dy2_c):
            j -= 1
        return bool(self._grids[key][i, j])


def _snap_granule(v: float, granularity: float) -> float:
    return round(v / granularity) * granularity


@dataclass(frozen=True)
class GaitSchedule:
    """Closed-loop speed schedule verified against the transition dynamics.

    Cruise is held in the small range; 90° turns run four 22.5° steps whose
    lengths alternate small/large with the stance (small when the stance foot
    matches the turn direction) and whose speeds follow turn_v_by_phase,
    indexed by the landing heading modulo a quarter turn.  That schedule is
    contractive in the lateral stance offset, so arbitrarily many chained
    quarter turns stay inside the tracking bounds.  Stops halve the speed
    and then drop to rest over short steps; rest seeds the lateral offset at
    stance_seed and the ramp back to cruise moves one granule per keyframe.
    """

    cruise_v: float = 0.20
    turn_v_by_phase: tuple[float, float, float, float] = (0.2, 0.1, 0.2, 0.15)
    turn_v_mid: float = 0.15
    launch_v: float = 0.10
    stance_seed: float = 0.02
    turn_d_pitches: tuple[int, int, int, int] = (2, 4, 2, 4)
    stop_d_pitches: int = 2


DEFAULT_GAIT = GaitSchedule()


def keyframe_policy(s_c: ApexState, delta_y2_c: float, action: Action,
                    viability=None, config: PolicyConfig | None = None,
                    params: PendulumParams | None = None,
                    next_action: Action | None = None,
                    landing_phase: int | None = None,
                    gait: GaitSchedule = DEFAULT_GAIT) -> ApexState:
    """Deterministic choice of the next apex state for a commanded action.

    Straight flat walking holds the current velocity (ramping toward cruise
    after a restart); steering follows the phase-keyed turn speed schedule,
    with landing_phase the post-step heading modulo a quarter turn (phase 0
    completes the turn at cruise); without it the one-step action lookahead
    distinguishes only turn-exit from mid-turn.  A stop command halves the
    velocity and then drops it to zero.  The selected state must be a viable
    transition, otherwise PolicyGapError is raised.
    """
    config = config or PolicyConfig()
    params = params or PendulumParams()
    v_c = s_c.v_apex
    g = config.v_granularity
    z_n = s_c.z_apex + action.delta_z_foot  # terrain-following apex height

    if action.c_stop:
        candidates = [0.0 if v_c <= gait.launch_v + 1e-9 else _snap_granule(v_c / 2.0, g)]
    elif action.delta_theta != 0.0:
        if landing_phase is None:
            exiting = next_action is not None and next_action.delta_theta == 0.0
            landing_phase = 0 if exiting else 3
        v_want = gait.turn_v_by_phase[landing_phase % 4]
        candidates = [v_want, gait.turn_v_mid, gait.launch_v, v_c]
    elif v_c == 0.0:
        candidates = [gait.launch_v]  # push-off
    elif v_c < gait.cruise_v - 1e-9:
        candidates = [min(v_c + g, gait.cruise_v), v_c]
    else:
        candidates = [v_c, max(v_c - g, config.v_small[0])]

    seen = set()
    for v_n in candidates:
        v_n = min(max(round(v_n, 9), 0.0), 0.45)
        if v_n in seen:
            continue
        seen.add(v_n)
        if _transition_ok(v_c, delta_y2_c, action, v_n, viability, config, params):
            return ApexState(v_n, z_n)
    raise PolicyGapError(
        f"no viable next apex for v={v_c}, dy2={delta_y2_c}, action={action}")


def _transition_ok(v_c, dy2_c, action, v_n, viability, config, params) -> bool:
    if v_n == 0.0 or v_c == 0.0:
        # rest-boundary hops: validated by direct simulation, not the map
        return _direct_check(v_c, dy2_c, action, v_n, config, params)
    if viability is not None and abs(v_n - v_c) < 1e-12:
        try:
            return viability.lookup(v_c, dy2_c, action)
        except KeyError:
            pass
    return _direct_check(v_c, dy2_c, action, v_n, config, params)


def _direct_check(v_c, dy2_c, action, v_n, config, params) -> bool:
    if v_c == 0.0:
        return _rest_departure_ok(dy2_c, action, v_n, params)
    sample = evaluate_transition(v_c, dy2_c, action, params, config, v_n=v_n)
    return sample.viable


def _rest_departure_ok(dy2_c, action, v_n, params) -> bool:
    """Push-off feasibility: the switch of the zero-integral orbit lies in range."""
    if action.delta_theta != 0.0 or v_n <= 0.0:
        return False
    w = params.omega
    x_sw = (v_n**2 + w**2 * action.d**2) / (2.0 * w**2 * action.d)
    return 0.0 <= x_sw <= action.d


def plan_rest_departure(dy2_c: float, action: Action, v_n: float,
                        params: PendulumParams) -> StepPlan:
    """Push-off step from standing: sagittal on the zero-first-integral manifold.

    The CoM departs the stance foot along the unstable manifold (v = w x) and
    switches support at the position giving the target next apex velocity.
    Departing exact rest takes unbounded time in the reduced model, so the
    lateral side is seeded by construction (mirrored offset, small matching
    tracking offset) rather than integrated; the push-off itself lives
    outside the model.
    """
    if not _rest_departure_ok(dy2_c, action, v_n, params):
        raise InfeasibleTransitionError("rest departure infeasible for this action")
    w = params.omega
    x_sw = (v_n**2 + w**2 * action.d**2) / (2.0 * w**2 * action.d)
    v_sw = w * x_sw
    t2 = time_to_position(action.d, x_sw, v_sw, action.d, w)
    t1 = 0.6  # nominal push-off duration for trace bookkeeping
    dy2_n = -dy2_c
    y_n = 1.5 * dy2_c
    foot_n_y = y_n - dy2_n
    verdict = check_balancing_safety(
        0.0, action, v_n, SteeringGeometry(dy2_c, 0.0, action.d), w)
    return StepPlan(0.0, dy2_c, 0.0, 0.0, x_sw, v_sw, t1, t2, action.d, y_n,
                    action.d, foot_n_y, dy2_c - y_n, dy2_n, verdict)
