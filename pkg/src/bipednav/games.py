"""Game encodings over the grid world.

Two layers: a coarse navigation game against the moving blocker (observable
or belief-tracking; see belief.py for the partially observable variant) and
a per-cell action game that plans footstep sequences to the commanded exit.

Navigation tick semantics (system first): the robot commits stop-or-move,
the blocker answers with one coarse step.  The blocker never enters the cell
of a standing robot; collisions and mid-tick swaps reduce to co-located
successor states because staying put is always among the blocker's options.
"""

from __future__ import annotations

import math
from .gr1 import GameBuilder, GameStructure, GR1Spec
from .keyframe import Action
from .world import (
    CARDINAL_HEADING16,
    CARDINAL_VECS,
    CARDINALS,
    CoarseState,
    Environment,
    IllegalFineMoveError,
    classify_step_height,
    coarse_neighbors,
)

JUSTICE_CLEAR_DISTANCE = 3  # blocker infinitely often at Chebyshev >= this


def _chebyshev(a, b) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def obstacle_moves(l_o, env: Environment, robot_cell=None, robot_standing=False):
    """Legal one-step blocker moves: stay or 4-adjacent within its domain."""
    domain = env.obstacle_domain()
    out = [l_o] if l_o in domain else []
    for dc, dr in CARDINAL_VECS.values():
        t = (l_o[0] + dc, l_o[1] + dr)
        if t in domain:
            out.append(t)
    if robot_standing and robot_cell is not None:
        out = [t for t in out if t != robot_cell] or [l_o]
    return sorted(set(out))


_OPPOSITE = {"E": "W", "W": "E", "N": "S", "S": "N"}


def robot_options(cell, heading, env: Environment):
    """Stop plus every reachable safe adjacent cell, with the new heading.

    Reversing in place is excluded: a 90° turn displaces the fine-grid path
    by ten rows, so a 180° about-face cannot be realized inside one cell.
    The coarse planner turns around by looping through a neighboring row.
    """
    options = [(("stop",), cell, heading, True)]
    state = CoarseState(cell, heading)
    for target in coarse_neighbors(state, env):
        for h, (dc, dr) in CARDINAL_VECS.items():
            if (cell[0] + dc, cell[1] + dr) == target and h != _OPPOSITE[heading]:
                options.append((("go", h), target, h, False))
    return options


def encode_navigation_game(env: Environment) -> tuple[GameStructure, GR1Spec]:
    """Fully observable navigation game; blocker position always known."""
    b = GameBuilder()
    init = (env.initial_robot.cell, env.initial_obstacle,
            env.initial_robot.heading, True)
    frontier = [init]
    b.state(init)
    seen = {init}
    while frontier:
        meta = frontier.pop()
        s = b.state(meta)
        l_r, l_o, h, standing = meta
        for act_meta, t, h2, standing2 in robot_options(l_r, h, env):
            succs = []
            for o2 in obstacle_moves(l_o, env, robot_cell=t, robot_standing=standing2):
                nxt = (t, o2, h2, standing2)
                succs.append(b.state(nxt))
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
            b.add_action(s, act_meta, succs)
    game = b.build(init)
    bad = frozenset(i for i, (r, o, *_rest) in enumerate(game.state_meta) if r == o)
    goals = [
        frozenset(i for i, m in enumerate(game.state_meta) if m[0] == env.goals[0]),
        frozenset(i for i, m in enumerate(game.state_meta) if m[0] == env.goals[1]),
    ]
    justice = frozenset(i for i, (r, o, *_rest) in enumerate(game.state_meta)
                        if _chebyshev(r, o) >= JUSTICE_CLEAR_DISTANCE)
    return game, GR1Spec(bad=bad, env_justice=[justice], sys_goals=goals)


# -- fine action game ---------------------------------------------------------

PITCHES_STRAIGHT = (4, 3, 2, 1)  # nominal first; shorter steps align parity
TURN_D_BY_PHASE = {0: 2, 1: 4, 2: 2, 3: 4}  # matching stance -> short step


def _heading_frame(exit_dir: str):
    """Rotation taking local (forward, left) to grid deltas for an exit."""
    f = CARDINAL_VECS[exit_dir]
    left = (-f[1], f[0])
    return f, left


def _turn_continuation(heading16: int, stance: str):
    """Forced mid-turn action at a non-cardinal heading.

    The stance disambiguates turn direction: the four-step protocol
    alternates stance starting from the matching side, so at one step past a
    cardinal the stance is opposite the turn direction, two steps past it
    matches, three past it is opposite again.
    """
    k = heading16 % 4
    if k == 0:
        return None
    if k in (1, 3):
        direction = 1 if stance == "right" else -1
        return direction, 4
    direction = 1 if stance == "left" else -1
    return direction, 2


def legal_fine_actions(heading16: int, stance: str, env: Environment,
                       on_stairs: bool):
    """Footstep actions available at a fine configuration, as Action objects."""
    pitch = env.fine_pitch
    turn = math.radians(22.5)
    out = []
    if stance == "both":
        # stepping out of a stand: straight only, either foot may lead
        return [Action(d=4 * pitch, i_st=st) for st in ("left", "right")]
    if heading16 % 4 == 0:
        for p in PITCHES_STRAIGHT:
            out.append(Action(d=p * pitch, i_st=stance))
        if not on_stairs:
            # a turn must start from the stance matching its direction
            direction = 1 if stance == "left" else -1
            out.append(Action(d=TURN_D_BY_PHASE[0] * pitch,
                              delta_theta=direction * turn, i_st=stance))
    else:
        cont = _turn_continuation(heading16, stance)
        if cont is not None:
            direction, d_pitches = cont
            out.append(Action(d=d_pitches * pitch, delta_theta=direction * turn,
                              i_st=stance))
    return out


def encode_action_game(env: Environment, coarse_cell, exit_dir: str
                       ) -> tuple[GameStructure, GR1Spec]:
    """Single-cell stepping game reaching the exit boundary, cardinal heading.

    The grid covers the coarse cell plus a margin strip beyond the exit edge;
    the goal is the strip's first line with the exit heading, i.e. the
    crossing step lands exactly on the neighbor's entry line.  The
    environment player is trivial here: obstacle avoidance lives one level
    up, so every action has a single deterministic response.
    """
    if exit_dir not in CARDINALS:
        raise ValueError(f"bad exit direction {exit_dir!r}")
    fc = env.fine_dims[0]
    margin = 4
    on_stairs = env.stair_cell_axis(coarse_cell) is not None
    exit_h16 = CARDINAL_HEADING16[exit_dir]

    def exit_depth(pos):
        if exit_dir == "E":
            return pos[0] - fc
        if exit_dir == "W":
            return -1 - pos[0]
        if exit_dir == "N":
            return pos[1] - fc
        return -1 - pos[1]

    def in_play(pos):
        x, y = pos
        if 0 <= x < fc and 0 <= y < fc:
            return True
        lateral = y if exit_dir in ("E", "W") else x
        return 0 <= lateral < fc and 0 <= exit_depth(pos) < margin

    def is_goal(meta):
        pos, h16, _stance = meta
        return exit_depth(pos) == 0 and h16 == exit_h16

    def step_targets(meta):
        pos, h16, stance = meta
        outs = []
        for action in legal_fine_actions(h16, stance, env, on_stairs):
            turn_steps = round(action.delta_theta / (math.tau / 16))
            h2 = (h16 + turn_steps) % 16
            ux = math.cos(h2 * math.tau / 16)
            uy = math.sin(h2 * math.tau / 16)
            dp = action.d / env.fine_pitch
            npos = (pos[0] + round(dp * ux), pos[1] + round(dp * uy))
            if not in_play(npos):
                continue
            gx = coarse_cell[0] * fc + pos[0]
            gy = coarse_cell[1] * fc + pos[1]
            ngx = coarse_cell[0] * fc + npos[0]
            ngy = coarse_cell[1] * fc + npos[1]
            if not (0 <= ngx < env.fine_heights.shape[0]
                    and 0 <= ngy < env.fine_heights.shape[1]):
                continue
            if not env.is_free((ngx // fc, ngy // fc)):
                continue
            dz = float(env.fine_heights[ngx, ngy] - env.fine_heights[gx, gy])
            try:
                classify_step_height(dz)
            except IllegalFineMoveError:
                continue
            if stance == "both":
                stance2 = {"left": "right", "right": "left"}[action.i_st]
            else:
                stance2 = {"left": "right", "right": "left"}[stance]
            act_meta = (round(dp), turn_steps, action.i_st)
            outs.append((act_meta, (npos, h2, stance2)))
        return outs

    if exit_dir == "E":
        xs, ys = range(0, fc + margin), range(fc)
    elif exit_dir == "W":
        xs, ys = range(-margin, fc), range(fc)
    elif exit_dir == "N":
        xs, ys = range(fc), range(0, fc + margin)
    else:
        xs, ys = range(fc), range(-margin, fc)

    b = GameBuilder()
    metas = []
    for x in xs:
        for y in ys:
            if not in_play((x, y)):
                continue
            for h16 in range(16):
                for stance in ("left", "right", "both"):
                    if stance == "both" and h16 % 4 != 0:
                        continue
                    metas.append(((x, y), h16, stance))
    for meta in metas:
        b.state(meta)
    for meta in metas:
        s = b.state(meta)
        if is_goal(meta):
            b.add_action(s, ("arrived",), [s])
            continue
        outs = step_targets(meta)
        for act, nxt in outs:
            b.add_action(s, act, [b.state(nxt)])
        if not outs:
            b.add_action(s, ("hold",), [s])

    # formal initial only; callers query the winning region for real entries
    init = ((fc // 2, fc // 2), exit_h16, "both")
    game = b.build(init)
    goal = frozenset(i for i, m in enumerate(game.state_meta) if is_goal(m))
    return game, GR1Spec(sys_goals=[goal])
