"""Balancing-safety membership checks for keyframe transitions.

A keyframe transition is balancing-safe when the phase-space state, once
re-expressed in the post-turn local frame, stays in the safe sector of each
saddle portrait: the sagittal state on or above the ascending asymptote (it
can climb over the next apex) and the lateral state strictly inside the
asymptote cone (lateral velocity returns to zero), plus the support switch
falling between the two apex positions.  All three conditions reduce to
closed-form velocity bounds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class IllPosedSteeringError(ValueError):
    """Steering geometry with inconsistent Δy2 / Δθ signs for the signed bounds."""


class InfeasibleSteeringGeometryError(ValueError):
    """Step geometry with a negative effective squared step length."""


class SafetyRule(enum.Enum):
    NONE = "none"
    STEER_APEX_LOW = "steer_apex_low"
    STEER_APEX_HIGH = "steer_apex_high"
    CONSEC_LOW = "consec_low"
    CONSEC_HIGH = "consec_high"
    STEER_CONSEC_LOW = "steer_consec_low"
    STEER_CONSEC_HIGH = "steer_consec_high"


@dataclass(frozen=True)
class SteeringGeometry:
    """Signed steering step geometry.

    delta_y2_c: lateral apex-to-foot offset at the current keyframe (m),
    left positive.  delta_theta: heading change (rad), left positive.
    d: step length between consecutive apexes, measured in the post-turn
    frame (m).
    """

    delta_y2_c: float
    delta_theta: float
    d: float

    def __post_init__(self):
        if abs(self.delta_theta) > math.pi / 4:
            raise ValueError("heading changes beyond ±45° are out of scope")

    def mirrored(self) -> "SteeringGeometry":
        return SteeringGeometry(-self.delta_y2_c, -self.delta_theta, self.d)


@dataclass(frozen=True)
class SafetyVerdict:
    safe: bool
    violated_rule: SafetyRule
    margin: float  # worst slack; m/s for apex-velocity rules, m^2/s^2 for squared rules

    def __post_init__(self):
        assert self.safe == (self.violated_rule is SafetyRule.NONE)


def steering_apex_bounds(geom: SteeringGeometry, omega: float) -> tuple[float, float]:
    """Admissible apex-velocity window (lower, upper) for a steering step.

    Signed form: requires delta_y2_c and delta_theta consistent (positive
    product), i.e. turning away from the stance foot.  A zero heading change
    returns (0, inf); zero lateral offset pins the window to exactly 0.
    """
    if geom.delta_theta == 0.0:
        return 0.0, math.inf
    t = math.tan(geom.delta_theta)
    if geom.delta_y2_c * t < 0.0:
        raise IllPosedSteeringError(
            f"delta_y2={geom.delta_y2_c} and delta_theta={geom.delta_theta} "
            "have inconsistent signs for the signed apex-velocity bounds")
    return geom.delta_y2_c * omega * t, geom.delta_y2_c * omega / t


def straight_consecutive_bounds(v_apex_c: float, d: float, omega: float) -> tuple[float, float]:
    """Window for the next squared apex velocity in straight walking."""
    if d <= 0:
        raise ValueError("step length must be positive")
    w2d2 = omega**2 * d**2
    return max(v_apex_c**2 - w2d2, 0.0), v_apex_c**2 + w2d2


def steering_consecutive_bounds(v_apex_c: float, geom: SteeringGeometry,
                                omega: float) -> tuple[float, float]:
    """Window for the next squared apex velocity under a heading change.

    Uses the signed effective squared step length d^2 + 2*Δy2*d*sinΔθ, which
    unifies the away-from-stance and toward-stance cases.
    """
    if geom.d <= 0:
        raise ValueError("step length must be positive")
    d2_eff = geom.d**2 + 2.0 * geom.delta_y2_c * geom.d * math.sin(geom.delta_theta)
    if d2_eff < 0.0:
        raise InfeasibleSteeringGeometryError(
            f"effective squared step length {d2_eff:.6f} is negative")
    vc_proj_sq = (v_apex_c * math.cos(geom.delta_theta)) ** 2
    lower = max(vc_proj_sq - omega**2 * geom.d**2, 0.0)
    upper = vc_proj_sq + omega**2 * d2_eff
    return lower, upper


def check_balancing_safety(s_c, action, s_n, geom: SteeringGeometry,
                           omega: float) -> SafetyVerdict:
    """Full membership check for one keyframe transition.

    s_c / s_n carry the apex velocities (objects with .v_apex, or floats).
    Mirror symmetry is used to canonicalize right turns; toward-stance turns
    are checked with the magnitude form of the apex-velocity window, which is
    what the first-integral sector conditions give in that geometry.
    """
    v_c = getattr(s_c, "v_apex", s_c)
    v_n = getattr(s_n, "v_apex", s_n)
    g = geom if geom.delta_theta >= 0.0 else geom.mirrored()

    worst = math.inf
    if g.delta_theta != 0.0:
        mag = SteeringGeometry(abs(g.delta_y2_c), g.delta_theta, g.d)
        lower, upper = steering_apex_bounds(mag, omega)
        if v_c < lower:
            return SafetyVerdict(False, SafetyRule.STEER_APEX_LOW, v_c - lower)
        if v_c > upper:
            return SafetyVerdict(False, SafetyRule.STEER_APEX_HIGH, upper - v_c)
        worst = min(worst, v_c - lower, upper - v_c)
        lo_sq, hi_sq = steering_consecutive_bounds(v_c, g, omega)
        low_rule, high_rule = SafetyRule.STEER_CONSEC_LOW, SafetyRule.STEER_CONSEC_HIGH
    else:
        lo_sq, hi_sq = straight_consecutive_bounds(v_c, g.d, omega)
        low_rule, high_rule = SafetyRule.CONSEC_LOW, SafetyRule.CONSEC_HIGH

    vn_sq = v_n**2
    if vn_sq < lo_sq:
        return SafetyVerdict(False, low_rule, vn_sq - lo_sq)
    if vn_sq > hi_sq:
        return SafetyVerdict(False, high_rule, hi_sq - vn_sq)
    worst = min(worst, vn_sq - lo_sq, hi_sq - vn_sq)
    return SafetyVerdict(True, SafetyRule.NONE, worst)
