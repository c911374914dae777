"""Belief tracking for the unseen blocker and the belief navigation game.

While the blocker is inside the robot's visual range its location is known
exactly; once it slips out of sight the belief becomes a set of environment
partitions that over-approximates where it could be.  Beliefs evolve by
one-step reachability followed by re-partitioning against the visibility of
the robot's new location: image cells that come into view either materialize
the blocker (an exact branch chosen by the environment) or are observed
empty, while the hidden remainder collapses into its partitions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gr1 import GameBuilder, GameStructure, GR1Spec
from .world import CARDINAL_VECS, Environment, visible_set
from .games import JUSTICE_CLEAR_DISTANCE, _chebyshev, robot_options


@dataclass(frozen=True)
class BeliefState:
    """Exact blocker location, or a set of partition indices covering it."""

    kind: str  # "exact" | "region"
    cell: tuple[int, int] | None = None
    partitions: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.kind == "exact":
            assert self.cell is not None
        elif self.kind == "region":
            assert self.partitions
        else:
            raise ValueError(f"bad belief kind {self.kind!r}")

    @staticmethod
    def exact(cell) -> "BeliefState":
        return BeliefState("exact", cell=tuple(cell))

    @staticmethod
    def region(partitions) -> "BeliefState":
        return BeliefState("region", partitions=frozenset(partitions))

    def key(self):
        if self.kind == "exact":
            return ("e", self.cell)
        return ("r", tuple(sorted(self.partitions)))

    @staticmethod
    def from_key(key) -> "BeliefState":
        if key[0] == "e":
            return BeliefState.exact(key[1])
        return BeliefState.region(key[1])


def belief_cells(belief: BeliefState, env: Environment) -> frozenset[tuple[int, int]]:
    """Cells the blocker may occupy under this belief (over-approximation).

    Region beliefs count every cell of their partitions that lies in the
    blocker's movement domain; the observation that carved the region is not
    replayed, which only errs on the safe side.
    """
    if belief.kind == "exact":
        return frozenset({belief.cell})
    domain = set(env.obstacle_domain())
    out = set()
    for p in belief.partitions:
        out |= set(env.partitions[p]) & domain
    return frozenset(out)


def _image(cells, env: Environment, forbidden=frozenset()):
    domain = set(env.obstacle_domain())
    out = set()
    for c in cells:
        if c in domain and c not in forbidden:
            out.add(c)
        for dc, dr in CARDINAL_VECS.values():
            t = (c[0] + dc, c[1] + dr)
            if t in domain and t not in forbidden:
                out.add(t)
    return out


def belief_successor(l_rc, b: BeliefState, env: Environment,
                     forbidden=frozenset()) -> list[BeliefState]:
    """Successor beliefs after one blocker step, observed from l_rc.

    forbidden cells are excluded from the blocker's move (the standing-robot
    rule).  Visible image cells become exact branches; the hidden remainder
    collapses into one region belief over its partitions.  The result is the
    minimal successor set consistent with the visibility function.
    """
    l_rc = tuple(l_rc)
    img = _image(belief_cells(b, env), env, forbidden=frozenset(forbidden))
    seen = visible_set(l_rc, env)
    out = [BeliefState.exact(c) for c in sorted(img & seen)]
    hidden = img - seen
    if hidden:
        out.append(BeliefState.region({env.partition_of(c) for c in hidden}))
    return out


def single_partition_environment(env: Environment) -> Environment:
    """Degenerate abstraction: the blocker could be in any non-visible cell.

    One partition covers the whole grid and the mobility-domain knowledge is
    dropped too; a planner without explicit tracking has neither."""
    doc = env.serialize()
    doc["partitions"] = [{
        "name": "anywhere",
        "cells": sorted([c, r] for c in range(env.coarse_dims[0])
                        for r in range(env.coarse_dims[1])),
    }]
    doc["obstacle_excluded"] = []
    doc["name"] = env.name + "_single_partition"
    import yaml

    from .world import load_environment
    return load_environment(yaml.safe_dump(doc))


def build_belief_game(env: Environment) -> tuple[GameStructure, GR1Spec]:
    """Navigation game lifted over belief states.

    Robot moves are exactly those of the observable game; only the blocker
    side changes, with the environment resolving which belief branch occurs.
    Safety: never co-located with an exactly known blocker (moving next to a
    possible cell is already suicidal because staying is always among the
    blocker's options, making an exact branch at the robot's cell appear).
    """
    b = GameBuilder()
    init = (env.initial_robot.cell, BeliefState.exact(env.initial_obstacle).key(),
            env.initial_robot.heading, True)
    b.state(init)
    frontier = [init]
    seen = {init}
    while frontier:
        meta = frontier.pop()
        s = b.state(meta)
        l_r, bkey, h, standing = meta
        belief = BeliefState.from_key(bkey)
        for act_meta, t, h2, standing2 in robot_options(l_r, h, env):
            forbidden = {t} if standing2 else frozenset()
            succs = []
            for b2 in belief_successor(t, belief, env, forbidden=forbidden):
                nxt = (t, b2.key(), h2, standing2)
                succs.append(b.state(nxt))
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
            b.add_action(s, act_meta, succs)
    game = b.build(init)

    def meta_belief(m):
        return BeliefState.from_key(m[1])

    bad = frozenset(
        i for i, m in enumerate(game.state_meta)
        if meta_belief(m).kind == "exact" and meta_belief(m).cell == m[0])
    goals = [
        frozenset(i for i, m in enumerate(game.state_meta) if m[0] == env.goals[0]),
        frozenset(i for i, m in enumerate(game.state_meta) if m[0] == env.goals[1]),
    ]
    # the clear-the-way assumption binds the blocker itself, so it is stated
    # on exactly observed positions; an unseen blocker owes nothing
    justice = frozenset(
        i for i, m in enumerate(game.state_meta)
        if meta_belief(m).kind != "exact"
        or _chebyshev(m[0], meta_belief(m).cell) >= JUSTICE_CLEAR_DISTANCE)
    return game, GR1Spec(bad=bad, env_justice=[justice], sys_goals=goals)
