import math

import numpy as np
import pytest
import yaml

from bipednav.belief import (
    BeliefState,
    belief_cells,
    belief_successor,
    build_belief_game,
    single_partition_environment,
)
from bipednav.games import encode_navigation_game, obstacle_moves, robot_options
from bipednav.gr1 import Strategy, Unrealizable, check_strategy, solve_gr1
from bipednav.world import load_environment, two_rooms_environment, vis, visible_set


@pytest.fixture(scope="module")
def env():
    return two_rooms_environment()


@pytest.fixture(scope="module")
def belief_game(env):
    return build_belief_game(env)


class TestBeliefSuccessor:
    def test_fully_visible_neighborhood_stays_exact(self, env):
        # robot right next to the blocker in the open east room
        succ = belief_successor((8, 2), BeliefState.exact((9, 2)), env)
        assert all(b.kind == "exact" for b in succ)
        cells = {b.cell for b in succ}
        assert cells == {(9, 2), (9, 1), (9, 3), (10, 2), (8, 2)}

    def test_exit_from_sight_collapses_to_partition(self, env):
        # blocker at the edge of the visual range; some moves go dark
        succ = belief_successor((6, 2), BeliefState.exact((8, 2)), env)
        kinds = {b.kind for b in succ}
        assert "exact" in kinds and "region" in kinds
        region = next(b for b in succ if b.kind == "region")
        hidden = belief_cells(region, env)
        assert all(not vis((6, 2), c, env) for c in hidden)

    def test_region_persists_while_unobserved(self, env):
        far = BeliefState.region({env.partition_of((10, 2))})
        succ = belief_successor((1, 2), far, env)
        regions = [b for b in succ if b.kind == "region"]
        assert regions  # nothing resolved from across the map
        # one-step spread: at most into the adjacent aisle
        grown = belief_cells(regions[0], env)
        assert grown <= {(c, r) for c in (9, 10) for r in range(5)}

    def test_region_flushed_into_view_goes_exact(self, env):
        # watching the whole aisle from close by forces materialization
        b = BeliefState.region({env.partition_of((10, 2))})
        succ = belief_successor((8, 2), b, env)
        assert all(s.kind == "exact" for s in succ)

    def test_standing_robot_cell_excluded(self, env):
        succ = belief_successor((9, 2), BeliefState.exact((10, 2)), env,
                                forbidden={(9, 2)})
        assert all(b.cell != (9, 2) for b in succ if b.kind == "exact")

    def test_blocker_never_enters_stairs(self, env):
        succ = belief_successor((4, 2), BeliefState.exact((6, 2)), env)
        for b in succ:
            for c in belief_cells(b, env):
                assert env.stair_cell_axis(c) is None

    def test_soundness_one_step(self, env):
        # every legal ground-truth move lands inside some successor belief
        rng = np.random.default_rng(5)
        domain = env.obstacle_domain()
        for _ in range(200):
            o = domain[rng.integers(len(domain))]
            robot = env.free_cells()[rng.integers(len(env.free_cells()))]
            succ = belief_successor(robot, BeliefState.exact(o), env)
            for o2 in obstacle_moves(o, env):
                assert any(o2 in belief_cells(b, env) for b in succ), (robot, o, o2)


class TestBeliefGame:
    def test_partitioned_realizable(self, env, belief_game):
        game, spec = belief_game
        strat = solve_gr1(game, spec)
        assert isinstance(strat, Strategy)
        assert check_strategy(game, spec, strat).ok

    def test_single_partition_unrealizable(self, env):
        game, spec = build_belief_game(single_partition_environment(env))
        out = solve_gr1(game, spec)
        assert isinstance(out, Unrealizable)
        assert out.winning_states == 0

    def test_fully_visible_equals_observable(self, env):
        # radius covering the map and nothing to hide behind: no region states
        doc = env.serialize()
        doc["visibility_radius"] = 12
        doc["static_obstacles"] = []
        wide = load_environment(yaml.safe_dump(doc))
        game, spec = build_belief_game(wide)
        kinds = {m[1][0] for m in game.state_meta}
        assert kinds == {"e"}
        nav_game, nav_spec = encode_navigation_game(wide)
        assert isinstance(solve_gr1(game, spec), Strategy)
        assert isinstance(solve_gr1(nav_game, nav_spec), Strategy)

    def test_robot_moves_independent_of_belief(self, env, belief_game):
        # successor robot locations depend only on the robot's own state
        game, _ = belief_game
        by_config = {}
        for s, meta in enumerate(game.state_meta):
            l_r, _b, h, standing = meta
            acts = frozenset(game.act_meta[j] for j in game.state_acts[s])
            by_config.setdefault((l_r, h), set()).add(acts)
        for key, variants in by_config.items():
            assert len(variants) == 1, key

    def test_belief_precision_monotone_on_refinement(self, env):
        # refining the degenerate abstraction recovers realizability
        coarse = single_partition_environment(env)
        out_coarse = solve_gr1(*build_belief_game(coarse))
        out_fine = solve_gr1(*build_belief_game(env))
        assert isinstance(out_coarse, Unrealizable)
        assert isinstance(out_fine, Strategy)


class TestNavigationGame:
    def test_observable_realizable(self, env):
        game, spec = encode_navigation_game(env)
        strat = solve_gr1(game, spec)
        assert isinstance(strat, Strategy)
        assert check_strategy(game, spec, strat).ok

    def test_collision_states_are_bad(self, env):
        game, spec = encode_navigation_game(env)
        for i in spec.bad:
            r, o, *_ = game.state_meta[i]
            assert r == o

    def test_stationary_robot_protected(self, env):
        moves = obstacle_moves((8, 2), env, robot_cell=(8, 1), robot_standing=True)
        assert (8, 1) not in moves
        moves2 = obstacle_moves((8, 2), env, robot_cell=(8, 1), robot_standing=False)
        assert (8, 1) in moves2

    def test_no_reversal_moves(self, env):
        opts = robot_options((8, 2), "E", env)
        dirs = {m[1] for m in opts if m[0][0] == "go"}
        assert ("W") not in {m[0][1] for m in opts if m[0][0] == "go"}

    def test_goal_tracking_alternates(self, env):
        game, spec = encode_navigation_game(env)
        strat = solve_gr1(game, spec)
        # play against an assumption-compliant evader and watch memory cycle
        from bipednav.simulate import RandomLegalObstacle
        evader = RandomLegalObstacle(env, seed=11, stall_bound=6)
        s, mem = game.initial, 0
        visits = []
        for _ in range(300):
            j, mem2 = strat.move(s, mem)
            if mem2 != mem:
                visits.append(game.state_meta[s][0])
            mem = mem2
            robot_next, _o, _h, standing = game.state_meta[game.act_succs[j][0]]
            o_cell = game.state_meta[s][1]
            o_next = evader.move(o_cell, robot_next, standing)
            s = next(t for t in game.act_succs[j] if game.state_meta[t][1] == o_next)
        assert len(visits) >= 4
        for a, b in zip(visits, visits[1:]):
            assert a != b  # strict alternation between the two goal cells
        assert set(visits) == {env.goals[0], env.goals[1]}
