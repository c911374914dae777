"""Session wire protocol: newline-delimited JSON messages over a TCP socket.

Message types (field layouts documented in docs/protocol.md):
  hello, state_update, legal_moves, move, reject, trajectory_chunk,
  episode_end.  The server speaks first (hello), then per tick sends
  state_update, trajectory chunks for the tick's keyframes, and legal_moves,
  after which it blocks for the client's move.
"""

from __future__ import annotations

import json

PROTOCOL_VERSION = 1
MESSAGE_TYPES = {
    "hello", "state_update", "legal_moves", "move", "reject",
    "trajectory_chunk", "episode_end",
}


class ProtocolError(ValueError):
    pass


def encode(msg: dict) -> bytes:
    if msg.get("type") not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg.get('type')!r}")
    return (json.dumps(msg, separators=(",", ":")) + "\n").encode()


def decode_line(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"unparseable message: {e}") from None
    if not isinstance(msg, dict) or msg.get("type") not in MESSAGE_TYPES:
        raise ProtocolError(f"malformed message {line[:80]!r}")
    return msg


def hello(env) -> dict:
    return {
        "type": "hello",
        "version": PROTOCOL_VERSION,
        "grid": {"dims": list(env.coarse_dims), "cell_size": env.coarse_cell_size},
        "static_obstacles": sorted(list(c) for c in env.static_obstacles),
        "stairs": sorted(list(c) for s in env.stairs for c in s.cells),
        "goals": [list(env.goals[0]), list(env.goals[1])],
        "partitions": [sorted(list(c) for c in p) for p in env.partitions],
        "visibility_radius": env.visibility_radius,
        "obstacle": list(env.initial_obstacle),
        "robot": list(env.initial_robot.cell),
    }


def state_update(tick, robot, belief_key, belief_cells_, visible, goals_visited,
                 obstacle) -> dict:
    return {
        "type": "state_update",
        "tick": tick,
        "robot": {"cell": list(robot.coarse), "heading": robot.heading,
                  "standing": robot.standing, "v_apex": round(robot.v, 4)},
        "belief": {"kind": belief_key[0], "value": _jsonable(belief_key[1]),
                   "cells": sorted(list(c) for c in belief_cells_)},
        "visible": sorted(list(c) for c in visible),
        "goals_visited": list(goals_visited),
        "obstacle": list(obstacle),
    }


def legal_moves(tick, moves) -> dict:
    return {"type": "legal_moves", "tick": tick, "moves": sorted(list(m) for m in moves)}


def reject(tick, reason) -> dict:
    return {"type": "reject", "tick": tick, "reason": reason}


def trajectory_chunk(tick, keyframe, samples) -> dict:
    return {"type": "trajectory_chunk", "tick": tick, "keyframe": keyframe,
            "samples": [[round(float(v), 5) for v in row] for row in samples]}


def episode_end(tick, outcome, goals_visited) -> dict:
    return {"type": "episode_end", "tick": tick, "outcome": outcome,
            "goals_visited": list(goals_visited)}


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v
