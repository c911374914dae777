"""Closed-loop executor: navigation strategy, per-cell stepping strategies,
keyframe policy and analytic step plans, with belief tracking and obstacle
models.

One navigation tick is one coarse transition (several walking steps) or a
stand-still; the blocker moves one coarse cell per tick and is frozen during
the intra-cell steps.  Every keyframe transition in an accepted trace is
viable: balancing-safe, offsets in range, signs alternating.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .belief import BeliefState, belief_cells, belief_successor, build_belief_game
from .games import (
    JUSTICE_CLEAR_DISTANCE,
    _chebyshev,
    encode_action_game,
    obstacle_moves,
)
from .gr1 import Unrealizable, solve_gr1
from .keyframe import (
    Action,
    ApexState,
    DEFAULT_GAIT,
    PolicyConfig,
    PolicyGapError,
    keyframe_policy,
    plan_rest_departure,
    plan_step,
)
from .pendulum import FootPlacement, LocalFrame, PendulumParams, PhaseTrajectory, rollout
from .world import CARDINAL_HEADING16, Environment

TRACE_SCHEMA_VERSION = 1


class EpisodeError(RuntimeError):
    """Safety violation, policy gap or illegal move aborted the episode."""


# -- obstacle models ----------------------------------------------------------


def _escape_step(cell, robot_cell, robot_standing, env: Environment):
    """One step of an assumption-compliant evader: path toward the farthest
    reachable domain cell to restore the clear-the-way recurrence."""
    domain = env.obstacle_domain()
    target = max(domain, key=lambda c: (_chebyshev(c, robot_cell), c))
    options = obstacle_moves(cell, env, robot_cell=robot_cell,
                             robot_standing=robot_standing)
    options = [c for c in options if c != robot_cell]
    return min(options, key=lambda c: (abs(c[0] - target[0]) + abs(c[1] - target[1]), c))


class ObstacleModel:
    """Base: legal one-cell moves with a stall bound standing in for the
    eventually-move-out-of-the-way assumption."""

    kind = "base"

    def __init__(self, env: Environment, seed: int = 0, stall_bound: int = 10):
        self.env = env
        self.rng = np.random.default_rng(seed)
        self.stall_bound = stall_bound
        self.stall = 0

    def _legal(self, cell, robot_cell, robot_standing):
        return obstacle_moves(cell, self.env, robot_cell=robot_cell,
                              robot_standing=robot_standing)

    def move(self, cell, robot_cell, robot_standing) -> tuple[int, int]:
        choice = self.choose(cell, robot_cell, robot_standing)
        legal = self._legal(cell, robot_cell, robot_standing)
        if choice not in legal:
            raise EpisodeError(f"obstacle model emitted illegal move {choice}")
        # internal proximity counter drives the compliance escapes
        if _chebyshev(choice, robot_cell) < JUSTICE_CLEAR_DISTANCE:
            self.stall += 1
        else:
            self.stall = 0
        return choice

    def forced_escape(self, cell, robot_cell) -> bool:
        return self.stall >= max(2, self.stall_bound - 6)

    def choose(self, cell, robot_cell, robot_standing):  # pragma: no cover
        raise NotImplementedError


class ScriptedObstacle(ObstacleModel):
    kind = "scripted"

    def __init__(self, env, path, **kw):
        super().__init__(env, **kw)
        self.path = list(path)
        self.i = 0

    def choose(self, cell, robot_cell, robot_standing):
        if self.i < len(self.path):
            nxt = tuple(self.path[self.i])
            self.i += 1
            return nxt
        return cell


class RandomLegalObstacle(ObstacleModel):
    kind = "random"

    def choose(self, cell, robot_cell, robot_standing):
        if self.forced_escape(cell, robot_cell):
            return _escape_step(cell, robot_cell, robot_standing, self.env)
        options = self._legal(cell, robot_cell, robot_standing)
        return options[self.rng.integers(len(options))]


class AdversarialObstacle(ObstacleModel):
    """Chases and blocks: minimizes distance to the robot, preferring cells
    on the robot's heading, while honoring the stall bound."""

    kind = "adversarial"

    def choose(self, cell, robot_cell, robot_standing):
        if self.forced_escape(cell, robot_cell):
            return _escape_step(cell, robot_cell, robot_standing, self.env)
        options = self._legal(cell, robot_cell, robot_standing)
        scored = sorted(
            options,
            key=lambda c: (_chebyshev(c, robot_cell),
                           abs(c[0] - robot_cell[0]) + abs(c[1] - robot_cell[1]), c))
        best = [c for c in scored
                if _chebyshev(c, robot_cell) == _chebyshev(scored[0], robot_cell)]
        return best[self.rng.integers(len(best))]


# -- trace records -------------------------------------------------------------


@dataclass
class KeyframeRecord:
    tick: int
    step: int
    coarse: tuple[int, int]
    fine: tuple[int, int]
    heading16: int
    stance: str
    action_d: float
    action_dtheta: float
    action_dz: float
    c_stop: bool
    v_apex: float
    z_apex: float
    dy1: float
    dy2: float
    safety_margin: float
    belief: tuple
    obstacle: tuple[int, int]
    position: tuple[float, float, float]

    def to_json(self) -> str:
        return json.dumps(self.__dict__, separators=(",", ":"))


@dataclass
class SimulationTrace:
    records: list[KeyframeRecord] = field(default_factory=list)
    trajectories: list[PhaseTrajectory] = field(default_factory=list)
    goal_visits: tuple[int, int] = (0, 0)
    outcome: str = "incomplete"
    ticks: int = 0
    violations: list[str] = field(default_factory=list)

    def write_jsonl(self, path):
        with open(path, "w") as f:
            f.write(json.dumps({"schema": TRACE_SCHEMA_VERSION,
                                "outcome": self.outcome,
                                "ticks": self.ticks,
                                "goal_visits": list(self.goal_visits)}) + "\n")
            for r in self.records:
                f.write(r.to_json() + "\n")


# -- synthesized planners -------------------------------------------------------


class Planner:
    """Synthesized two-level planner for one environment."""

    def __init__(self, env: Environment, use_belief: bool = True):
        self.env = env
        self.use_belief = use_belief
        if use_belief:
            self.nav_game, self.nav_spec = build_belief_game(env)
        else:
            from .games import encode_navigation_game
            self.nav_game, self.nav_spec = encode_navigation_game(env)
        out = solve_gr1(self.nav_game, self.nav_spec)
        if isinstance(out, Unrealizable):
            raise EpisodeError(f"navigation game unrealizable: {out.reason}")
        self.nav_strategy = out
        self._action_cache: dict = {}

    def _cell_signature(self, cell):
        axis = self.env.stair_cell_axis(cell)
        fc = self.env.fine_dims[0]
        base = self.env.fine_heights[cell[0] * fc:(cell[0] + 1) * fc,
                                     cell[1] * fc:(cell[1] + 1) * fc]
        return (axis, base.tobytes())

    def action_strategy(self, cell, exit_dir):
        key = (self._cell_signature(cell), exit_dir)
        if key not in self._action_cache:
            game, spec = encode_action_game(self.env, cell, exit_dir)
            out = solve_gr1(game, spec)
            if isinstance(out, Unrealizable):
                raise EpisodeError(
                    f"action game unrealizable for cell {cell} exit {exit_dir}")
            self._action_cache[key] = (game, out)
        return self._action_cache[key]

    def tick_bound(self, stall_bound: int = 10) -> int:
        """Liveness bound per goal round: every winning state is visited at
        most once per rank descent and each wait is capped by the stall
        bound, so the winning-set size times the stall allowance bounds one
        full goal cycle."""
        return 2 * (stall_bound + 1) * len(self.nav_strategy.winning)


# -- executor -------------------------------------------------------------------


@dataclass
class _RobotState:
    coarse: tuple[int, int]
    heading: str
    standing: bool
    fine: tuple[int, int]
    heading16: int
    stance: str
    v: float
    z: float
    dy2: float
    world_xy: tuple[float, float]
    theta: float


def run_episode(env: Environment, planner: Planner, obstacle: ObstacleModel,
                max_ticks: int = 400, params: PendulumParams | None = None,
                config: PolicyConfig | None = None, goal_rounds: int = 2,
                collect_trajectories: bool = False,
                trajectory_dt: float = 0.02, observer=None) -> SimulationTrace:
    """Run the layered loop until both goals are visited goal_rounds times.

    Aborts with EpisodeError on any safety violation, policy gap or illegal
    move; annotates the outcome env_loss when the blocker exceeds its stall
    bound (the finite stand-in for the clear-the-way assumption).
    """
    params = params or PendulumParams()
    config = config or PolicyConfig()
    trace = SimulationTrace()
    fc = env.fine_dims[0]

    robot = _RobotState(
        coarse=env.initial_robot.cell, heading=env.initial_robot.heading,
        standing=True, fine=(fc // 2, fc // 2),
        heading16=CARDINAL_HEADING16[env.initial_robot.heading],
        stance="both", v=0.0,
        z=env.fine_height(env.initial_robot.cell, (fc // 2, fc // 2)) + params.h_apex,
        dy2=DEFAULT_GAIT.stance_seed,
        world_xy=_fine_world_xy(env, env.initial_robot.cell, (fc // 2, fc // 2)),
        theta=CARDINAL_HEADING16[env.initial_robot.heading] * math.tau / 16,
    )
    obstacle_cell = env.initial_obstacle
    belief = BeliefState.exact(obstacle_cell)
    nav_state = _nav_state_meta(planner, robot, belief, obstacle_cell)
    nav_idx = planner.nav_game.index_of(nav_state)
    memory = 0
    goal_visits = [0, 0]
    prev_coarse = None
    blocked_ticks = 0
    step_counter = 0

    def log_keyframe(tick, action, plan_dy1, plan_dy2, margin):
        nonlocal step_counter
        trace.records.append(KeyframeRecord(
            tick=tick, step=step_counter, coarse=robot.coarse, fine=robot.fine,
            heading16=robot.heading16, stance=robot.stance,
            action_d=action.d if action else 0.0,
            action_dtheta=action.delta_theta if action else 0.0,
            action_dz=action.delta_z_foot if action else 0.0,
            c_stop=bool(action and action.c_stop),
            v_apex=robot.v, z_apex=robot.z, dy1=plan_dy1, dy2=plan_dy2,
            safety_margin=margin, belief=BeliefState.key(belief),
            obstacle=obstacle_cell, position=(robot.world_xy[0], robot.world_xy[1], robot.z)))
        step_counter += 1

    for tick in range(max_ticks):
        if goal_visits[0] >= goal_rounds and goal_visits[1] >= goal_rounds:
            trace.outcome = "goals_complete"
            break
        if (nav_idx, memory) not in planner.nav_strategy.moves:
            raise EpisodeError(f"navigation strategy undefined at {nav_state}")
        act_id, memory = planner.nav_strategy.move(nav_idx, memory)
        nav_action = planner.nav_game.act_meta[act_id]
        rec_mark, traj_mark = len(trace.records), len(trace.trajectories)

        if nav_action[0] == "stop":
            _execute_stand(env, robot, planner, params, config, trace, tick,
                           log_keyframe, collect_trajectories, trajectory_dt)
        else:
            _execute_crossing(env, robot, nav_action[1], planner, params, config,
                              trace, tick, log_keyframe, collect_trajectories,
                              trajectory_dt)

        if observer is not None:
            observer.tick_update(tick, robot, belief, obstacle_cell,
                                 tuple(goal_visits), trace.records[rec_mark:],
                                 trace.trajectories[traj_mark:])

        # blocker takes its coarse step, then the robot observes
        obstacle_cell = obstacle.move(obstacle_cell, robot.coarse, robot.standing)
        if obstacle_cell == robot.coarse:
            trace.violations.append(f"collision at tick {tick}")
            trace.outcome = "collision"
            break
        forbidden = {robot.coarse} if robot.standing else frozenset()
        successors = belief_successor(robot.coarse, belief, env, forbidden=forbidden)
        belief = _consistent_branch(successors, obstacle_cell, env)
        if not _belief_sound(belief, obstacle_cell, env):
            trace.violations.append(f"belief unsound at tick {tick}")
            trace.outcome = "belief_violation"
            break

        # assumption (c) stand-in: the blocker may not pin a waiting robot
        # within the clearance radius for more than the stall bound
        if nav_action[0] == "stop" and \
                _chebyshev(obstacle_cell, robot.coarse) < JUSTICE_CLEAR_DISTANCE:
            blocked_ticks += 1
        else:
            blocked_ticks = 0
        if blocked_ticks >= obstacle.stall_bound:
            trace.outcome = "env_loss"
            trace.ticks = tick + 1
            break

        for gi, gcell in enumerate(env.goals):
            if robot.coarse == gcell and prev_coarse != gcell:
                goal_visits[gi] += 1
        prev_coarse = robot.coarse

        nav_state = _nav_state_meta(planner, robot, belief, obstacle_cell)
        try:
            nav_idx = planner.nav_game.index_of(nav_state)
        except KeyError:
            raise EpisodeError(f"reached unmodeled navigation state {nav_state}")
        trace.ticks = tick + 1
    else:
        trace.outcome = "max_ticks"

    trace.goal_visits = tuple(goal_visits)
    return trace


def _fine_world_xy(env, coarse, fine):
    w = env.waypoint(coarse, fine)
    return (w.x, w.y)


def _nav_state_meta(planner, robot, belief, obstacle_cell):
    if planner.use_belief:
        return (robot.coarse, belief.key(), robot.heading, robot.standing)
    return (robot.coarse, obstacle_cell, robot.heading, robot.standing)


def _consistent_branch(successors, true_cell, env):
    for b in successors:
        if b.kind == "exact" and b.cell == true_cell:
            return b
    for b in successors:
        if b.kind == "region" and true_cell in belief_cells(b, env):
            return b
    raise EpisodeError(f"no belief branch consistent with blocker at {true_cell}")


def _belief_sound(belief, true_cell, env) -> bool:
    return true_cell in belief_cells(belief, env)


def _keyframe_step(env, robot: _RobotState, action: Action, params, config,
                   landing_phase=None, collect=False, dt=0.02):
    """Advance the robot one keyframe, returning (plan, trajectory | None)."""
    if robot.v == 0.0:
        # standing: the lateral offset is seeded by the pivot foot choice
        robot.dy2 = DEFAULT_GAIT.stance_seed * (1 if action.i_st == "right" else -1)
    s_c = ApexState(robot.v, robot.z)
    s_n = keyframe_policy(s_c, robot.dy2, action, config=config, params=params,
                          landing_phase=landing_phase)
    if robot.v == 0.0:
        plan = plan_rest_departure(robot.dy2, action, s_n.v_apex, params)
    else:
        plan = plan_step(robot.v, robot.dy2, action, s_n.v_apex, params)
    verdict = plan.verdict
    if not verdict.safe:
        raise EpisodeError(f"unsafe keyframe transition: {verdict}")

    # pose update: the step frame sits at the current stance foot, rotated to
    # the post-turn heading; the next apex position comes from the plan
    theta_new = robot.theta + action.delta_theta
    c, s = math.cos(theta_new), math.sin(theta_new)
    foot_x = robot.world_xy[0] - (-math.sin(robot.theta)) * robot.dy2
    foot_y = robot.world_xy[1] - math.cos(robot.theta) * robot.dy2
    ax = plan.x_apex_n - plan.x0
    ay = plan.y_apex_n - plan.y0
    base_x = robot.world_xy[0]
    base_y = robot.world_xy[1]
    # express the apex displacement (new frame) in world coordinates
    dx = c * ax - s * ay
    dy = s * ax + c * ay
    new_xy = (base_x + dx, base_y + dy)

    traj = None
    if collect:
        traj = _sample_step_trajectory(plan, action, params, theta_new,
                                       (foot_x, foot_y), robot.z, dt)

    robot.world_xy = new_xy
    robot.theta = theta_new
    robot.v = s_n.v_apex
    robot.z = s_n.z_apex
    robot.dy2 = plan.delta_y2_n
    return plan, traj


def _sample_step_trajectory(plan, action, params, theta, foot_world, z_apex, dt):
    """Both stance phases on their exact closed-form orbits.

    The chain point is evaluated analytically (never from the sampled grid),
    so every segment's orbit integral is exact.  Rest departures ride the
    zero-integral manifold, so their first phase is reconstructed backward
    from the switch state, and capped durations stand in for the unbounded
    rest asymptotics.
    """
    from .pendulum import PhaseState, SurfaceSegment, coefficients, evaluate

    frame = LocalFrame(origin=(foot_world[0], foot_world[1], z_apex - params.h_apex),
                       heading_theta=theta)
    w = params.omega
    slope = action.delta_z_foot / plan.foot_n_x if plan.foot_n_x else 0.0
    surf1 = SurfaceSegment(slope, 0.0, params.h_apex)
    pushing_off = plan.vx0 == 0.0 and plan.v_switch > 0.0
    if pushing_off:
        # manifold segment: x = x_switch e^(w (t - t1)), lateral mirror seed
        t1 = min(plan.t1, 1.2)
        x1 = plan.x_switch * math.exp(-w * t1)
        init = PhaseState(x1, plan.y0, z_apex, w * x1, 0.0)
    else:
        t1 = min(plan.t1, 2.0)
        init = PhaseState(plan.x0, plan.y0, z_apex, plan.vx0, plan.vy0)
    seg1 = rollout(init, FootPlacement(0.0, 0.0, 0.0), params, t1, dt,
                   surface=surf1, frame=frame)

    # exact switch state from the phase-one coefficients
    ax, bx = coefficients(init.x, init.vx, 0.0, w)
    ay, by = coefficients(init.y, init.vy, 0.0, w)
    x_sw, vx_sw = (float(v) for v in evaluate(ax, bx, 0.0, w, t1))
    y_sw, vy_sw = (float(v) for v in evaluate(ay, by, 0.0, w, t1))
    t2 = plan.t2 if math.isfinite(plan.t2) else 1.5
    if pushing_off:
        # lateral hand-off reconstructed backward from the seeded next apex
        a2, b2 = coefficients(plan.y_apex_n, 0.0, plan.foot_n_y, w)
        y_sw, vy_sw = (float(v) for v in evaluate(a2, b2, plan.foot_n_y, w, -t2))
        x_sw, vx_sw = plan.x_switch, plan.v_switch
    init2 = PhaseState(x_sw, y_sw, z_apex, vx_sw, vy_sw)
    foot2 = FootPlacement(plan.foot_n_x, plan.foot_n_y, action.delta_z_foot)
    seg2 = rollout(init2, foot2, params, t2, dt,
                   surface=SurfaceSegment(slope, plan.foot_n_x, params.h_apex),
                   frame=frame)
    return PhaseTrajectory(
        frame=frame,
        segments=seg1.segments + seg2.segments,
        times=np.concatenate([seg1.times, seg1.times[-1] + seg2.times]),
        positions=np.vstack([seg1.positions, seg2.positions]),
        velocities=np.vstack([seg1.velocities, seg2.velocities]),
        switch_position=plan.x_switch,
    )


def _execute_stand(env, robot, planner, params, config, trace, tick,
                   log_keyframe, collect, dt):
    """Stand for one navigation tick, ramping down first if moving."""
    pitch = env.fine_pitch
    while robot.v > 0.0:
        stop_action = Action(d=DEFAULT_GAIT.stop_d_pitches * pitch,
                             delta_theta=0.0, i_st=robot.stance, c_stop=True)
        plan, traj = _keyframe_step(env, robot, stop_action, params, config,
                                    collect=collect, dt=dt)
        _advance_fine(env, robot, stop_action)
        if traj is not None:
            trace.trajectories.append(traj)
        log_keyframe(tick, stop_action, plan.delta_y1_n, plan.delta_y2_n,
                     plan.verdict.margin)
        if stop_action.c_stop and robot.v == 0.0:
            robot.stance = "both"
            robot.dy2 = math.copysign(DEFAULT_GAIT.stance_seed, robot.dy2 or 1.0)
    robot.standing = True
    log_keyframe(tick, None, 0.0, robot.dy2, math.inf)


def _advance_fine(env, robot, action):
    """Track the discrete fine cell from the commanded displacement."""
    turn_steps = round(action.delta_theta / (math.tau / 16))
    h2 = (robot.heading16 + turn_steps) % 16
    ux, uy = math.cos(h2 * math.tau / 16), math.sin(h2 * math.tau / 16)
    dp = action.d / env.fine_pitch
    dx, dy = round(dp * ux), round(dp * uy)
    fc = env.fine_dims[0]
    gx = robot.coarse[0] * fc + robot.fine[0] + dx
    gy = robot.coarse[1] * fc + robot.fine[1] + dy
    robot.coarse = (gx // fc, gy // fc)
    robot.fine = (gx % fc, gy % fc)
    robot.heading16 = h2
    stepping = action.i_st if robot.stance == "both" else robot.stance
    robot.stance = {"left": "right", "right": "left"}[stepping]


def _execute_crossing(env, robot, direction, planner, params, config, trace,
                      tick, log_keyframe, collect, dt):
    """Walk from the current fine state into the adjacent coarse cell."""
    game, strategy = planner.action_strategy(robot.coarse, direction)
    start_coarse = robot.coarse
    fc = env.fine_dims[0]
    guard = 0
    while robot.coarse == start_coarse:
        guard += 1
        if guard > 80:
            raise EpisodeError("crossing did not terminate")
        meta = (robot.fine, robot.heading16, robot.stance)
        try:
            idx = game.index_of(meta)
        except KeyError:
            raise EpisodeError(f"fine state {meta} missing from action game")
        if idx not in strategy.winning:
            raise EpisodeError(f"fine state {meta} outside the winning region")
        act_id, _ = strategy.move(idx, 0)
        d_pitches, turn_steps, i_st = game.act_meta[act_id]
        action = Action(d=d_pitches * env.fine_pitch,
                        delta_theta=turn_steps * math.tau / 16,
                        delta_z_foot=_step_dz(env, robot, d_pitches, turn_steps),
                        i_st=i_st if robot.stance == "both" else robot.stance)
        landing_phase = (robot.heading16 + turn_steps) % 4
        plan, traj = _keyframe_step(env, robot, action, params, config,
                                    landing_phase=landing_phase,
                                    collect=collect, dt=dt)
        _advance_fine(env, robot, action)
        if traj is not None:
            trace.trajectories.append(traj)
        log_keyframe(tick, action, plan.delta_y1_n, plan.delta_y2_n,
                     plan.verdict.margin)
    robot.heading = direction
    robot.standing = False


def _step_dz(env, robot, d_pitches, turn_steps):
    h2 = (robot.heading16 + turn_steps) % 16
    ux, uy = math.cos(h2 * math.tau / 16), math.sin(h2 * math.tau / 16)
    dx, dy = round(d_pitches * ux), round(d_pitches * uy)
    fc = env.fine_dims[0]
    gx = robot.coarse[0] * fc + robot.fine[0]
    gy = robot.coarse[1] * fc + robot.fine[1]
    ngx, ngy = gx + dx, gy + dy
    if not (0 <= ngx < env.fine_heights.shape[0] and 0 <= ngy < env.fine_heights.shape[1]):
        raise EpisodeError("step leaves the world")
    return round(float(env.fine_heights[ngx, ngy] - env.fine_heights[gx, gy]), 6)
