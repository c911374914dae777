import json
import math
import socket
import time

import numpy as np
import pytest

from bipednav import protocol
from bipednav.belief import BeliefState, belief_cells
from bipednav.figures import emit_figures
from bipednav.keyframe import PolicyConfig
from bipednav.pendulum import PendulumParams, first_integral
from bipednav.simulate import (
    AdversarialObstacle,
    EpisodeError,
    Planner,
    RandomLegalObstacle,
    ScriptedObstacle,
    run_episode,
)
from bipednav.world import two_rooms_environment


@pytest.fixture(scope="module")
def env():
    return two_rooms_environment()


@pytest.fixture(scope="module")
def planner(env):
    return Planner(env)


class TestEpisodes:
    def test_random_obstacle_completes(self, env, planner):
        trace = run_episode(env, planner, RandomLegalObstacle(env, seed=5))
        assert trace.outcome == "goals_complete"
        assert trace.goal_visits[0] >= 2 and trace.goal_visits[1] >= 2
        assert not trace.violations

    def test_adversarial_obstacle_completes(self, env, planner):
        trace = run_episode(env, planner, AdversarialObstacle(env, seed=5))
        assert trace.outcome == "goals_complete"
        assert not trace.violations

    def test_no_collisions_and_margins_positive(self, env, planner):
        trace = run_episode(env, planner, AdversarialObstacle(env, seed=9))
        for r in trace.records:
            assert r.coarse != r.obstacle
            # rest hops sit exactly on the floored lower velocity bound
            assert r.safety_margin >= 0
            if not r.c_stop and r.v_apex > 0:
                assert r.safety_margin > 0

    def test_offsets_in_range_and_alternating(self, env, planner):
        trace = run_episode(env, planner, RandomLegalObstacle(env, seed=2))
        walking = [r for r in trace.records if r.v_apex > 0]
        for r in walking:
            assert -0.3 <= r.dy1 <= 0.3
            assert -0.2 <= r.dy2 <= 0.2
        signs = [math.copysign(1, r.dy2) for r in walking if abs(r.dy2) > 1e-9]
        flips = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
        assert flips >= 0.9 * (len(signs) - 1)  # rest boundaries reseed the sign

    def test_belief_soundness_every_tick(self, env, planner):
        trace = run_episode(env, planner, RandomLegalObstacle(env, seed=7))
        for r in trace.records:
            b = BeliefState.from_key(r.belief)
            assert r.obstacle in belief_cells(b, env)

    def test_determinism(self, env, planner):
        t1 = run_episode(env, planner, RandomLegalObstacle(env, seed=3))
        t2 = run_episode(env, planner, RandomLegalObstacle(env, seed=3))
        assert [r.to_json() for r in t1.records] == [r.to_json() for r in t2.records]

    def test_tick_bound_holds(self, env, planner):
        bound = planner.tick_bound()
        trace = run_episode(env, planner, AdversarialObstacle(env, seed=1),
                            max_ticks=min(bound, 400))
        assert trace.outcome == "goals_complete"
        assert trace.ticks <= bound

    def test_scripted_obstacle(self, env, planner):
        path = [(8, 2)] * 100  # blocker that never moves
        trace = run_episode(env, planner, ScriptedObstacle(env, path, seed=0))
        assert trace.outcome in ("goals_complete", "env_loss")
        assert all(r.coarse != r.obstacle for r in trace.records)

    def test_trace_serialization(self, env, planner, tmp_path):
        trace = run_episode(env, planner, RandomLegalObstacle(env, seed=4))
        out = tmp_path / "trace.jsonl"
        trace.write_jsonl(out)
        lines = out.read_text().strip().splitlines()
        head = json.loads(lines[0])
        assert head["schema"] == 1 and head["outcome"] == "goals_complete"
        assert len(lines) == len(trace.records) + 1

    def test_turns_take_exactly_four_keyframes(self, env, planner):
        trace = run_episode(env, planner, RandomLegalObstacle(env, seed=6))
        runs = []
        run = 0
        for r in trace.records:
            if abs(r.action_dtheta) > 1e-9:
                run += 1
            else:
                if run:
                    runs.append(run)
                run = 0
        if run:
            runs.append(run)
        assert runs, "expected at least one turn in the episode"
        assert all(n % 4 == 0 for n in runs)

    def test_conservation_along_sampled_trajectories(self, env, planner):
        params = PendulumParams()
        trace = run_episode(env, planner, RandomLegalObstacle(env, seed=8),
                            collect_trajectories=True, goal_rounds=1)
        assert trace.trajectories
        for traj in trace.trajectories[:40]:
            for seg in traj.segments:
                t0, t1 = seg.t_span
                for a, b, idx in ((seg.coeff_a_x, seg.coeff_b_x, 0),
                                  (seg.coeff_a_y, seg.coeff_b_y, 1)):
                    e = -4.0 * a * b * params.omega**2
                    # spot samples conserve the orbit integral
                    for t in np.linspace(t0, t1, 5):
                        w = params.omega
                        p = a * math.exp(w * t) + b * math.exp(-w * t)
                        v = w * (a * math.exp(w * t) - b * math.exp(-w * t))
                        assert abs(first_integral(p, v, 0.0, w) - e) < 1e-9


class TestFigures:
    def test_figures_emitted(self, env, planner, tmp_path):
        trace = run_episode(env, planner, RandomLegalObstacle(env, seed=5),
                            collect_trajectories=True, goal_rounds=1)
        paths = emit_figures(trace, tmp_path, env=env)
        assert len(paths) == 3
        for p in paths:
            assert p.endswith(".svg")
            assert (tmp_path / p.split("/")[-1]).stat().st_size > 1000

    def test_empty_trace_rejected(self, env, tmp_path):
        from bipednav.simulate import SimulationTrace

        with pytest.raises(ValueError):
            emit_figures(SimulationTrace(), tmp_path)


class TestSessionServer:
    @pytest.fixture()
    def server(self, env, planner):
        from bipednav.server import SessionServer
        import threading

        srv = SessionServer(env, planner, port=0, max_ticks=60)
        t = threading.Thread(target=srv.serve_forever, daemon=True)
        t.start()
        yield srv
        srv.shutdown()

    def _connect(self, server):
        port = server.server_address[1]
        sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        return sock, sock.makefile("rwb")

    def test_session_plays_turns(self, env, server):
        sock, f = self._connect(server)
        hello = protocol.decode_line(f.readline().decode())
        assert hello["type"] == "hello" and hello["version"] == 1
        moves_made = 0
        obstacle = tuple(hello["obstacle"])
        while moves_made < 8:
            msg = protocol.decode_line(f.readline().decode())
            if msg["type"] == "legal_moves":
                target = tuple(msg["moves"][0])
                f.write(protocol.encode({"type": "move", "tick": msg["tick"],
                                         "cell": list(target)}))
                f.flush()
                obstacle = target
                moves_made += 1
            elif msg["type"] == "episode_end":
                break
        assert moves_made >= 1
        sock.close()

    def test_illegal_moves_rejected_without_consuming_turn(self, env, server):
        sock, f = self._connect(server)
        f.readline()  # hello
        while True:
            msg = protocol.decode_line(f.readline().decode())
            if msg["type"] == "legal_moves":
                # two-cell jump: rejected with a reason
                bad = [99, 99]
                f.write(protocol.encode({"type": "move", "tick": msg["tick"],
                                         "cell": bad}))
                f.flush()
                break
        while True:
            msg = protocol.decode_line(f.readline().decode())
            if msg["type"] == "reject":
                assert "reason" in msg and msg["reason"]
                break
        # the turn was not consumed: legal_moves comes again
        msg = protocol.decode_line(f.readline().decode())
        assert msg["type"] == "legal_moves"
        sock.close()

    def test_state_updates_carry_belief(self, env, server):
        sock, f = self._connect(server)
        f.readline()
        saw_state = False
        for _ in range(50):
            msg = protocol.decode_line(f.readline().decode())
            if msg["type"] == "state_update":
                saw_state = True
                assert msg["belief"]["kind"] in ("e", "r")
                assert msg["belief"]["cells"]
            if msg["type"] == "legal_moves":
                f.write(protocol.encode({"type": "move", "tick": msg["tick"],
                                         "cell": msg["moves"][0]}))
                f.flush()
            if msg["type"] == "episode_end":
                break
        assert saw_state
        sock.close()


class TestCli:
    def test_check_subcommand(self, tmp_path, capsys):
        from bipednav.cli import main

        records = tmp_path / "records.txt"
        records.write_text("0.4,0.4,0.4,0.0,0.1,1.0\n0.45,0.1,0.1,0.0,0.0,1.0\n")
        assert main(["check", str(records)]) == 0
        out = capsys.readouterr().out
        assert "SAFE" in out and "UNSAFE" in out

    def test_viability_map_subcommand(self, tmp_path, capsys):
        from bipednav.cli import main

        out = tmp_path / "map.csv"
        assert main(["viability-map", "--out", str(out), "--resolution", "12",
                     "--step-lengths", "0.3", "--headings", "22.5"]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("d,dtheta_deg")
        assert len(lines) == 1 + 12 * 12

    def test_synthesize_subcommand(self, tmp_path, capsys):
        from bipednav.cli import main

        out = tmp_path / "strategy.txt"
        assert main(["synthesize", "--out", str(out)]) == 0
        text = out.read_text()
        assert text.startswith("# reactive strategy v1")
        assert "->" in text
