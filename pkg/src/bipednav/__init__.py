"""Safe bipedal navigation toolkit.

Reduced-order gait trajectories with balancing-safety checks, a
viability-guided keyframe policy, reactive two-player game synthesis with
belief tracking over a coarse/fine grid world, and a closed-loop simulator
with an interactive adversary session service.
"""

from .pendulum import (
    FootPlacement,
    LocalFrame,
    PendulumParams,
    PhaseState,
    PhaseTrajectory,
    SurfaceSegment,
    UnreachableStateError,
    first_integral,
    omega_of,
    rollout,
    rotate_frame,
    switching_position,
    velocity_at,
)
from .safety import (
    SafetyRule,
    SafetyVerdict,
    SteeringGeometry,
    check_balancing_safety,
    steering_apex_bounds,
    steering_consecutive_bounds,
    straight_consecutive_bounds,
)
from .keyframe import (
    Action,
    ApexState,
    KeyframeState,
    PolicyConfig,
    PolicyGapError,
    TransitionSample,
    ViabilityMap,
    build_viability_map,
    is_viable,
    keyframe_policy,
    plan_step,
    simulate_transition,
)

__version__ = "0.1.0"
