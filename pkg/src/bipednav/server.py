"""Interactive adversary sessions over TCP.

Each connection plays one episode: the server walks the synthesized robot
and the remote client moves the blocker.  Per tick the server sends a state
update, the tick's keyframe trajectory chunks and the legal blocker moves,
then blocks for the client's move.  Illegal moves are rejected without
consuming the turn; a timeout makes the server play a random legal move and
flag it.  The protocol is newline-delimited JSON (see protocol.py and
docs/protocol.md).
"""

from __future__ import annotations

import socketserver
import threading

import numpy as np

from . import protocol
from .belief import belief_cells
from .simulate import EpisodeError, ObstacleModel, Planner, run_episode
from .world import Environment, visible_set

MOVE_TIMEOUT_S = 30.0


class RemoteObstacle(ObstacleModel):
    """Blocker driven by a connected client, with validation and fallback."""

    kind = "remote"

    def __init__(self, env, rfile, wfile, tick_ref, seed=0, **kw):
        super().__init__(env, seed=seed, **kw)
        self.rfile = rfile
        self.wfile = wfile
        self.tick_ref = tick_ref
        self.timeouts = 0

    def choose(self, cell, robot_cell, robot_standing):
        tick = self.tick_ref[0]
        legal = self._legal(cell, robot_cell, robot_standing)
        while True:
            self.wfile.write(protocol.encode(protocol.legal_moves(tick, legal)))
            self.wfile.flush()
            line = self.rfile.readline()
            if not line:
                raise ConnectionError("client disconnected")
            try:
                msg = protocol.decode_line(line.decode().strip())
            except protocol.ProtocolError as e:
                self.wfile.write(protocol.encode(protocol.reject(tick, str(e))))
                continue
            if msg["type"] != "move":
                self.wfile.write(protocol.encode(
                    protocol.reject(tick, f"expected a move, got {msg['type']}")))
                continue
            target = tuple(msg.get("cell", ()))
            if len(target) != 2:
                self.wfile.write(protocol.encode(protocol.reject(tick, "bad cell")))
                continue
            if max(abs(target[0] - cell[0]), abs(target[1] - cell[1])) > 1 \
                    or abs(target[0] - cell[0]) + abs(target[1] - cell[1]) > 1:
                self.wfile.write(protocol.encode(
                    protocol.reject(tick, "blockers move one cell per tick")))
                continue
            if robot_standing and target == robot_cell:
                self.wfile.write(protocol.encode(
                    protocol.reject(tick, "may not enter a standing robot's cell")))
                continue
            if target not in legal:
                self.wfile.write(protocol.encode(
                    protocol.reject(tick, f"cell {list(target)} is not reachable")))
                continue
            return target


class SessionObserver:
    """Streams per-tick protocol messages for one episode."""

    def __init__(self, env, wfile, tick_ref):
        self.env = env
        self.wfile = wfile
        self.tick_ref = tick_ref
        self._vis_cache = {}

    def tick_update(self, tick, robot, belief, obstacle_cell, goal_visits,
                    new_records, new_trajectories):
        self.tick_ref[0] = tick
        if robot.coarse not in self._vis_cache:
            self._vis_cache[robot.coarse] = visible_set(robot.coarse, self.env)
        msg = protocol.state_update(
            tick, robot, belief.key(), belief_cells(belief, self.env),
            self._vis_cache[robot.coarse], goal_visits, obstacle_cell)
        self.wfile.write(protocol.encode(msg))
        for k, traj in enumerate(new_trajectories):
            samples = np.column_stack([traj.times, traj.positions, traj.velocities])
            step = max(1, len(samples) // 40)
            self.wfile.write(protocol.encode(
                protocol.trajectory_chunk(tick, k, samples[::step].tolist())))
        self.wfile.flush()

    def episode_end(self, trace):
        self.wfile.write(protocol.encode(
            protocol.episode_end(trace.ticks, trace.outcome, trace.goal_visits)))
        self.wfile.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        env = self.server.env
        planner = self.server.planner
        self.wfile.write(protocol.encode(protocol.hello(env)))
        self.wfile.flush()
        tick_ref = [0]
        remote = RemoteObstacle(env, self.rfile, self.wfile, tick_ref,
                                stall_bound=self.server.stall_bound)
        observer = SessionObserver(env, self.wfile, tick_ref)
        try:
            trace = run_episode(env, planner, remote, max_ticks=self.server.max_ticks,
                                observer=observer, collect_trajectories=True)
            observer.episode_end(trace)
        except (ConnectionError, BrokenPipeError):
            pass
        except EpisodeError as e:
            try:
                self.wfile.write(protocol.encode(
                    protocol.episode_end(tick_ref[0], f"error: {e}", (0, 0))))
                self.wfile.flush()
            except OSError:
                pass


class SessionServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, env: Environment, planner: Planner, port: int,
                 max_ticks: int = 400, stall_bound: int = 10):
        self.env = env
        self.planner = planner
        self.max_ticks = max_ticks
        self.stall_bound = stall_bound
        super().__init__(("127.0.0.1", port), _Handler)


def serve_session(env: Environment, planner: Planner | None = None,
                  port: int = 7345, **kw) -> SessionServer:
    """Start the session service on a background thread; returns the server."""
    planner = planner or Planner(env)
    server = SessionServer(env, planner, port, **kw)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
