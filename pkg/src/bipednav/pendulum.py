"""Closed-form trajectory primitives for a prismatic inverted pendulum.

All quantities live in a step-local frame: x is the walking (sagittal)
direction, y lateral (left positive), z vertical.  Once the center of mass
is constrained to a piecewise-linear height surface the horizontal dynamics
decouple per axis and each stance phase has the closed form

    p(t) = A e^(w t) + B e^(-w t) + p_foot,

where w is the asymptote slope of the saddle in the phase portrait.  The
vertical coordinate is kinematic: it follows the surface exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class UnreachableStateError(ValueError):
    """The pendulum orbit through the initial state never reaches the query."""


class DegenerateStepError(ValueError):
    """Consecutive foot placements coincide; no support switch exists."""


@dataclass(frozen=True)
class PendulumParams:
    """Gravity and apex height; the asymptote slope follows from them."""

    g: float = 9.81
    h_apex: float = 1.0

    def __post_init__(self):
        if self.g <= 0 or self.h_apex <= 0:
            raise ValueError(f"g and h_apex must be positive, got g={self.g}, h_apex={self.h_apex}")

    @property
    def omega(self) -> float:
        return math.sqrt(self.g / self.h_apex)


def omega_of(g: float, h_apex: float) -> float:
    """Asymptote slope sqrt(g / h_apex) of the phase-portrait saddle."""
    if g <= 0 or h_apex <= 0:
        raise ValueError(f"g and h_apex must be positive, got g={g}, h_apex={h_apex}")
    return math.sqrt(g / h_apex)


@dataclass(frozen=True)
class SurfaceSegment:
    """Piecewise-linear CoM height surface, h = slope_k*(x - x_foot_ref) + h_apex."""

    slope_k: float
    x_foot_ref: float
    h_apex: float

    def height_above_foot(self, x):
        h = self.slope_k * (np.asarray(x) - self.x_foot_ref) + self.h_apex
        if np.any(h <= 0):
            raise ValueError("surface height must stay positive over the step range")
        return h


@dataclass(frozen=True)
class PhaseState:
    """CoM position and horizontal velocity in a step-local frame."""

    x: float
    y: float
    z: float
    vx: float
    vy: float

    def __post_init__(self):
        vals = (self.x, self.y, self.z, self.vx, self.vy)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"phase state components must be finite, got {vals}")

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


def _normalize_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    t = math.fmod(theta, 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    elif t > math.pi:
        t -= 2.0 * math.pi
    return t


@dataclass(frozen=True)
class LocalFrame:
    """World pose of a step-local coordinate frame."""

    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    heading_theta: float = 0.0
    frame_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "heading_theta", _normalize_angle(self.heading_theta))

    def to_world(self, x: float, y: float, z: float = 0.0) -> tuple[float, float, float]:
        c, s = math.cos(self.heading_theta), math.sin(self.heading_theta)
        ox, oy, oz = self.origin
        return (ox + c * x - s * y, oy + s * x + c * y, oz + z)

    def from_world(self, wx: float, wy: float, wz: float = 0.0) -> tuple[float, float, float]:
        c, s = math.cos(self.heading_theta), math.sin(self.heading_theta)
        ox, oy, oz = self.origin
        dx, dy = wx - ox, wy - oy
        return (c * dx + s * dy, -s * dx + c * dy, wz - oz)


@dataclass(frozen=True)
class FootPlacement:
    """Stance foot location; stance_index alternates except out of rest."""

    x: float
    y: float
    z: float = 0.0
    stance_index: str = "right"  # "left" | "right" | "both"

    def __post_init__(self):
        if self.stance_index not in ("left", "right", "both"):
            raise ValueError(f"bad stance index {self.stance_index!r}")


@dataclass(frozen=True)
class TrajectorySegment:
    """One stance phase: exponential coefficients per horizontal axis."""

    foot: FootPlacement
    t_span: tuple[float, float]
    coeff_a_x: float
    coeff_b_x: float
    coeff_a_y: float
    coeff_b_y: float
    surface: SurfaceSegment


@dataclass
class PhaseTrajectory:
    """Sampled CoM trajectory with its closed-form segment description."""

    frame: LocalFrame
    segments: list[TrajectorySegment]
    times: np.ndarray
    positions: np.ndarray  # (n, 3)
    velocities: np.ndarray  # (n, 2)
    switch_position: float | None = None

    def sample_states(self) -> list[PhaseState]:
        return [
            PhaseState(p[0], p[1], p[2], v[0], v[1])
            for p, v in zip(self.positions, self.velocities)
        ]

    def final_state(self) -> PhaseState:
        p, v = self.positions[-1], self.velocities[-1]
        return PhaseState(p[0], p[1], p[2], v[0], v[1])

    def to_csv(self, path) -> None:
        """One record per sample; fixed header, comma separated."""
        header = "time,frame,x,y,z,vx,vy"
        rows = np.column_stack(
            [self.times, np.full_like(self.times, self.frame.frame_id), self.positions, self.velocities]
        )
        np.savetxt(path, rows, delimiter=",", header=header, comments="",
                   fmt=["%.6f", "%d", "%.9f", "%.9f", "%.9f", "%.9f", "%.9f"])


def coefficients(p0: float, v0: float, p_foot: float, omega: float) -> tuple[float, float]:
    """Exponential coefficients (A, B) for the orbit through (p0, v0)."""
    a = 0.5 * ((p0 - p_foot) + v0 / omega)
    b = 0.5 * ((p0 - p_foot) - v0 / omega)
    return a, b


def evaluate(a: float, b: float, p_foot: float, omega: float, t):
    """Position and velocity at time(s) t on an orbit given its coefficients."""
    ep = np.exp(omega * np.asarray(t, dtype=float))
    em = 1.0 / ep
    p = a * ep + b * em + p_foot
    v = omega * (a * ep - b * em)
    return p, v


def velocity_at(p: float, p0: float, v0: float, p_foot: float, omega: float,
                branch_sign: int = 1) -> float:
    """Orbit velocity at position p, from the first integral of the motion.

    branch_sign selects the phase-portrait branch; callers derive it from the
    travel direction.  Raises UnreachableStateError when the orbit through
    (p0, v0) never attains p, including the rest-on-the-foot equilibrium.
    """
    if branch_sign not in (1, -1):
        raise ValueError("branch_sign must be +1 or -1")
    if p0 == p_foot and v0 == 0.0 and p != p_foot:
        raise UnreachableStateError("equilibrium over the foot never leaves it")
    radicand = omega**2 * ((p - p_foot) ** 2 - (p0 - p_foot) ** 2) + v0**2
    if radicand < 0.0:
        raise UnreachableStateError(
            f"position {p} not reachable from ({p0}, {v0}) about foot {p_foot}")
    return branch_sign * math.sqrt(radicand)


def first_integral(p: float, v: float, p_foot: float, omega: float) -> float:
    """Conserved quantity v^2 - w^2 (p - p_foot)^2; positive on crossing orbits."""
    return v**2 - omega**2 * (p - p_foot) ** 2


def time_to_position(p_target: float, p0: float, v0: float, p_foot: float,
                     omega: float) -> float:
    """Earliest nonnegative time at which the orbit reaches p_target.

    Solves A e^(wt) + B e^(-wt) = p_target - p_foot for e^(wt) and picks the
    smallest root >= 1 (t >= 0).  Raises UnreachableStateError if the orbit
    never gets there in forward time.
    """
    a, b = coefficients(p0, v0, p_foot, omega)
    q = p_target - p_foot
    if abs(a) < 1e-15:
        # pure decay toward the foot
        if abs(q) < 1e-15 and abs(b) < 1e-15:
            return 0.0
        if b == 0.0 or q / b <= 0.0 or q / b > 1.0 + 1e-12:
            raise UnreachableStateError("decaying orbit never reaches target")
        return -math.log(min(q / b, 1.0)) / omega
    disc = q * q - 4.0 * a * b
    if disc < 0.0:
        raise UnreachableStateError("orbit never reaches target position")
    sq = math.sqrt(disc)
    roots = [(q - sq) / (2.0 * a), (q + sq) / (2.0 * a)]
    valid = [r for r in roots if r >= 1.0 - 1e-12]
    if not valid:
        raise UnreachableStateError("target position lies in backward time")
    return math.log(max(min(valid), 1.0)) / omega


def switching_position(apex_c: float, apex_n: float, foot_c: float, foot_n: float,
                       v_c: float, v_n: float, omega: float) -> float:
    """Sagittal support-switch location between two consecutive orbits.

    Intersection of the current orbit (apex over foot_c, velocity v_c) and the
    next orbit (apex over foot_n, velocity v_n), from velocity continuity.
    Requires a constant omega across the switch.
    """
    if foot_n == foot_c:
        raise DegenerateStepError("foot placements coincide; no switching position")
    c = ((apex_c - foot_c) ** 2 - (apex_n - foot_n) ** 2
         + (v_n**2 - v_c**2) / omega**2)
    return 0.5 * (c / (foot_n - foot_c) + (foot_c + foot_n))


def rotate_frame(state: PhaseState, delta_theta: float,
                 center: tuple[float, float] = (0.0, 0.0)) -> PhaseState:
    """Re-express a state in a frame rotated by delta_theta about center.

    A former apex state generally stops being one: after a nonzero rotation it
    picks up a lateral velocity component and a sagittal offset from the foot.
    """
    if abs(delta_theta) >= math.pi / 2:
        raise ValueError("frame rotations are limited to |delta_theta| < pi/2")
    c, s = math.cos(delta_theta), math.sin(delta_theta)
    cx, cy = center
    dx, dy = state.x - cx, state.y - cy
    # coordinates of a fixed point rotate by -delta_theta when the frame turns
    x = cx + c * dx + s * dy
    y = cy - s * dx + c * dy
    vx = c * state.vx + s * state.vy
    vy = -s * state.vx + c * state.vy
    return PhaseState(x, y, state.z, vx, vy)


def rollout(initial: PhaseState, foot: FootPlacement, params: PendulumParams,
            duration: float, dt: float = 1e-3,
            surface: SurfaceSegment | None = None,
            frame: LocalFrame | None = None) -> PhaseTrajectory:
    """Analytic single-stance rollout; exact at every sample regardless of dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    w = params.omega
    if surface is None:
        surface = SurfaceSegment(0.0, foot.x, params.h_apex)
    ax, bx = coefficients(initial.x, initial.vx, foot.x, w)
    ay, by = coefficients(initial.y, initial.vy, foot.y, w)
    n = max(int(round(duration / dt)), 0)
    t = np.linspace(0.0, n * dt, n + 1)
    px, vx = evaluate(ax, bx, foot.x, w, t)
    py, vy = evaluate(ay, by, foot.y, w, t)
    pz = foot.z + surface.height_above_foot(px)
    seg = TrajectorySegment(foot, (0.0, n * dt), ax, bx, ay, by, surface)
    return PhaseTrajectory(
        frame=frame or LocalFrame(),
        segments=[seg],
        times=t,
        positions=np.column_stack([px, py, np.broadcast_to(pz, px.shape)]),
        velocities=np.column_stack([vx, vy]),
    )
