"""Grid-world environment model.

A coarse navigation grid (cells a few meters wide) carries static obstacles,
goals, stair cells and belief partitions; every coarse cell holds a fine grid
for per-step action planning, with a terrain height per fine cell.  Headings
are 4 cardinal directions coarsely and 16 compass points (22.5° apart) on the
fine grid.  Environments load from a strict YAML document and are immutable
afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
import yaml

CARDINALS = ("E", "N", "W", "S")
CARDINAL_VECS = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}
CARDINAL_HEADING16 = {"E": 0, "N": 4, "W": 8, "S": 12}
HEADING16_COUNT = 16
STEP_HEIGHT_CLASSES = {
    -0.2: "down2", -0.1: "down1", 0.0: "flat", 0.1: "up1", 0.2: "up2",
}


class WorldDocumentError(ValueError):
    """Environment document failed schema or invariant validation."""


class IllegalFineMoveError(ValueError):
    """Fine-grid step leaves the local bounds or lands on an untraversable rise."""


@dataclass(frozen=True)
class CoarseState:
    cell: tuple[int, int]
    heading: str  # one of CARDINALS

    def __post_init__(self):
        if self.heading not in CARDINALS:
            raise ValueError(f"bad coarse heading {self.heading!r}")


@dataclass(frozen=True)
class FineState:
    cell: tuple[int, int]  # fine cell within one coarse cell
    heading16: int
    stance: str  # left | right | both

    def __post_init__(self):
        if not 0 <= self.heading16 < HEADING16_COUNT:
            raise ValueError(f"bad fine heading {self.heading16}")
        if self.stance not in ("left", "right", "both"):
            raise ValueError(f"bad stance {self.stance!r}")


@dataclass(frozen=True)
class Waypoint:
    """World position of a fine-cell centroid at terrain height."""

    x: float
    y: float
    z: float


@dataclass(frozen=True)
class StairSpec:
    cells: tuple[tuple[int, int], ...]
    axis: str  # travel axis: E means ramps rise along +x
    rise_per_tread: float
    tread_pitches: int
    entry_flat_pitches: int = 2


@dataclass(frozen=True)
class Environment:
    coarse_dims: tuple[int, int]  # (columns, rows)
    coarse_cell_size: float
    fine_dims: tuple[int, int]
    static_obstacles: frozenset[tuple[int, int]]
    goals: tuple[tuple[int, int], tuple[int, int]]
    stairs: tuple[StairSpec, ...]
    partitions: tuple[frozenset[tuple[int, int]], ...]
    partition_names: tuple[str, ...]
    visibility_radius: int
    base_heights: np.ndarray  # per coarse cell
    fine_heights: np.ndarray  # global fine grid (cols*fine, rows*fine)
    initial_robot: CoarseState
    initial_obstacle: tuple[int, int]
    obstacle_excluded: frozenset[tuple[int, int]]
    name: str = "environment"

    # -- geometry ---------------------------------------------------------

    @property
    def fine_pitch(self) -> float:
        return self.coarse_cell_size / self.fine_dims[0]

    def in_bounds(self, cell) -> bool:
        c, r = cell
        return 0 <= c < self.coarse_dims[0] and 0 <= r < self.coarse_dims[1]

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and tuple(cell) not in self.static_obstacles

    def free_cells(self) -> list[tuple[int, int]]:
        return [(c, r) for c in range(self.coarse_dims[0])
                for r in range(self.coarse_dims[1]) if (c, r) not in self.static_obstacles]

    def stair_cell_axis(self, cell) -> str | None:
        for s in self.stairs:
            if tuple(cell) in s.cells:
                return s.axis
        return None

    def partition_of(self, cell) -> int:
        for i, p in enumerate(self.partitions):
            if tuple(cell) in p:
                return i
        raise KeyError(f"cell {cell} not covered by any partition")

    def obstacle_domain(self) -> list[tuple[int, int]]:
        """Cells the blocker can ever occupy: the connected component of its
        start cell within the free, non-excluded grid."""
        cached = getattr(self, "_obstacle_domain", None)
        if cached is None:
            passable = {c for c in self.free_cells() if c not in self.obstacle_excluded}
            seen = {self.initial_obstacle}
            frontier = [self.initial_obstacle]
            while frontier:
                c = frontier.pop()
                for dc, dr in CARDINAL_VECS.values():
                    n = (c[0] + dc, c[1] + dr)
                    if n in passable and n not in seen:
                        seen.add(n)
                        frontier.append(n)
            cached = sorted(seen)
            object.__setattr__(self, "_obstacle_domain", cached)
        return cached

    # -- fine grid --------------------------------------------------------

    def global_fine_index(self, coarse_cell, fine_cell) -> tuple[int, int]:
        fc, fr = self.fine_dims
        return (coarse_cell[0] * fc + fine_cell[0], coarse_cell[1] * fr + fine_cell[1])

    def fine_height(self, coarse_cell, fine_cell) -> float:
        gx, gy = self.global_fine_index(coarse_cell, fine_cell)
        return float(self.fine_heights[gx, gy])

    def waypoint(self, coarse_cell, fine_cell) -> Waypoint:
        pitch = self.fine_pitch
        gx, gy = self.global_fine_index(coarse_cell, fine_cell)
        return Waypoint((gx + 0.5) * pitch, (gy + 0.5) * pitch,
                        float(self.fine_heights[gx, gy]))

    def serialize(self) -> dict:
        """Document form; load(serialize()) is semantically identical."""
        return {
            "name": self.name,
            "grid": {
                "coarse_dims": list(self.coarse_dims),
                "coarse_cell_size": self.coarse_cell_size,
                "fine_dims": list(self.fine_dims),
            },
            "static_obstacles": sorted(list(c) for c in self.static_obstacles),
            "goals": {"first": list(self.goals[0]), "second": list(self.goals[1])},
            "stairs": [
                {"cells": sorted(list(c) for c in s.cells), "axis": s.axis,
                 "rise_per_tread": s.rise_per_tread, "tread_pitches": s.tread_pitches,
                 "entry_flat_pitches": s.entry_flat_pitches}
                for s in self.stairs
            ],
            "base_heights": [[float(self.base_heights[c, r]) for r in range(self.coarse_dims[1])]
                             for c in range(self.coarse_dims[0])],
            "partitions": [
                {"name": n, "cells": sorted(list(c) for c in p)}
                for n, p in zip(self.partition_names, self.partitions)
            ],
            "visibility_radius": self.visibility_radius,
            "initial": {
                "robot": {"cell": list(self.initial_robot.cell),
                          "heading": self.initial_robot.heading},
                "obstacle": list(self.initial_obstacle),
            },
            "obstacle_excluded": sorted(list(c) for c in self.obstacle_excluded),
        }


# -- visibility -------------------------------------------------------------


def _supercover_cells(a: tuple[int, int], b: tuple[int, int]):
    """All grid cells touched by the center-to-center segment, corners included.

    Symmetric in its endpoints; passing exactly through a lattice corner
    contributes both side cells, which makes diagonal squeezes opaque.
    """
    (x0, y0), (x1, y1) = a, b
    cells = {a, b}
    dx, dy = x1 - x0, y1 - y0
    steps = 2 * max(abs(dx), abs(dy), 1)
    for i in range(1, steps):
        t = i / steps
        x = x0 + 0.5 + t * dx
        y = y0 + 0.5 + t * dy
        fx, fy = x - math.floor(x), y - math.floor(y)
        on_vx = abs(fx) < 1e-9 or abs(fx - 1.0) < 1e-9
        on_vy = abs(fy) < 1e-9 or abs(fy - 1.0) < 1e-9
        cx, cy = math.floor(x), math.floor(y)
        if on_vx and on_vy:
            # lattice corner: all four touching cells
            for ox in (-1, 0):
                for oy in (-1, 0):
                    cells.add((round(x) + ox, round(y) + oy))
        elif on_vx:
            cells.add((round(x) - 1, cy))
            cells.add((round(x), cy))
        elif on_vy:
            cells.add((cx, round(y) - 1))
            cells.add((cx, round(y)))
        else:
            cells.add((cx, cy))
    return cells


def vis(l_rc, target, env: Environment) -> bool:
    """Visibility: within the radius (Chebyshev) and not occluded by walls."""
    l_rc, target = tuple(l_rc), tuple(target)
    if not (env.in_bounds(l_rc) and env.in_bounds(target)):
        raise ValueError("visibility query out of bounds")
    if max(abs(l_rc[0] - target[0]), abs(l_rc[1] - target[1])) > env.visibility_radius:
        return False
    if l_rc == target:
        return True
    blockers = env.static_obstacles - {l_rc, target}
    return not (_supercover_cells(l_rc, target) & blockers)


def visible_set(l_rc, env: Environment) -> frozenset[tuple[int, int]]:
    r = env.visibility_radius
    out = []
    for dc in range(-r, r + 1):
        for dr in range(-r, r + 1):
            c = (l_rc[0] + dc, l_rc[1] + dr)
            if env.in_bounds(c) and vis(l_rc, c, env):
                out.append(c)
    return frozenset(out)


# -- coarse moves ------------------------------------------------------------


def coarse_neighbors(state: CoarseState, env: Environment) -> list[tuple[int, int]]:
    """4-connected reachable cells; stair cells only along their travel axis."""
    out = []
    here_axis = env.stair_cell_axis(state.cell)
    for h, (dc, dr) in CARDINAL_VECS.items():
        nxt = (state.cell[0] + dc, state.cell[1] + dr)
        if not env.is_free(nxt):
            continue
        axis_dirs = {"E": ("E", "W"), "N": ("N", "S")}
        if here_axis is not None and h not in axis_dirs[here_axis]:
            continue
        nxt_axis = env.stair_cell_axis(nxt)
        if nxt_axis is not None and h not in axis_dirs[nxt_axis]:
            continue
        out.append(nxt)
    return sorted(out)


# -- fine moves --------------------------------------------------------------


def heading16_vector(h: int) -> tuple[float, float]:
    ang = h * (2.0 * math.pi / HEADING16_COUNT)
    return math.cos(ang), math.sin(ang)


def classify_step_height(dz: float) -> str:
    for v, name in STEP_HEIGHT_CLASSES.items():
        if abs(dz - v) < 1e-6:
            return name
    raise IllegalFineMoveError(f"terrain rise {dz:+.3f} m has no step-height class")


def fine_step_target(state: FineState, action, env: Environment,
                     coarse_cell: tuple[int, int]):
    """Apply one step on the fine grid.

    Returns (FineState, Waypoint, height class name).  The displacement is
    the commanded step length along the post-turn heading, quantized to whole
    fine cells.  The resulting cell may spill into an adjacent coarse cell
    (boundary-crossing steps); the returned fine cell is then expressed in
    that neighbor's local coordinates via the waypoint.
    """
    d_pitches = action.d / env.fine_pitch
    turn_steps = round(action.delta_theta / (2.0 * math.pi / HEADING16_COUNT))
    h_new = (state.heading16 + turn_steps) % HEADING16_COUNT
    ux, uy = heading16_vector(h_new)
    dx = round(d_pitches * ux)
    dy = round(d_pitches * uy)
    fc, fr = env.fine_dims
    gx, gy = env.global_fine_index(coarse_cell, state.cell)
    ngx, ngy = gx + dx, gy + dy
    if not (0 <= ngx < env.coarse_dims[0] * fc and 0 <= ngy < env.coarse_dims[1] * fr):
        raise IllegalFineMoveError("step leaves the world")
    new_coarse = (ngx // fc, ngy // fr)
    if not env.is_free(new_coarse):
        raise IllegalFineMoveError(f"step lands in blocked coarse cell {new_coarse}")
    dz = float(env.fine_heights[ngx, ngy] - env.fine_heights[gx, gy])
    cls = classify_step_height(dz)
    stance_next = {"left": "right", "right": "left", "both": action.i_st}[state.stance] \
        if state.stance != "both" else action.i_st
    new_fine = FineState((ngx % fc, ngy % fr), h_new, stance_next)
    wp = env.waypoint(new_coarse, new_fine.cell)
    return new_fine, wp, cls


# -- document loading --------------------------------------------------------

_TOP_KEYS = {"name", "grid", "static_obstacles", "goals", "stairs", "base_heights",
             "partitions", "visibility_radius", "initial", "obstacle_excluded"}


def _require_keys(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise WorldDocumentError(f"unknown fields {sorted(unknown)} in {where}")


def _cells(lst, where) -> list[tuple[int, int]]:
    try:
        return [(int(c), int(r)) for c, r in lst]
    except (TypeError, ValueError) as e:
        raise WorldDocumentError(f"bad cell list in {where}: {e}") from None


def load_environment(document: str) -> Environment:
    """Parse and validate an environment document (YAML text)."""
    try:
        doc = yaml.safe_load(document)
    except yaml.YAMLError as e:
        raise WorldDocumentError(f"unparseable document: {e}") from None
    if not isinstance(doc, dict):
        raise WorldDocumentError("document root must be a mapping")
    _require_keys(doc, _TOP_KEYS, "document root")
    for key in ("grid", "goals", "partitions", "initial"):
        if key not in doc:
            raise WorldDocumentError(f"missing required section {key!r}")

    grid = doc["grid"]
    _require_keys(grid, {"coarse_dims", "coarse_cell_size", "fine_dims"}, "grid")
    coarse_dims = tuple(int(v) for v in grid["coarse_dims"])
    fine_dims = tuple(int(v) for v in grid["fine_dims"])
    cell_size = float(grid["coarse_cell_size"])
    if len(coarse_dims) != 2 or min(coarse_dims) < 1:
        raise WorldDocumentError(f"bad coarse dims {coarse_dims}")
    if len(fine_dims) != 2 or min(fine_dims) < 2 or fine_dims[0] != fine_dims[1]:
        raise WorldDocumentError(f"bad fine dims {fine_dims}")

    statics = frozenset(_cells(doc.get("static_obstacles", []), "static_obstacles"))
    _require_keys(doc["goals"], {"first", "second"}, "goals")
    goals = (tuple(int(v) for v in doc["goals"]["first"]),
             tuple(int(v) for v in doc["goals"]["second"]))

    stairs = []
    for i, s in enumerate(doc.get("stairs", [])):
        _require_keys(s, {"cells", "axis", "rise_per_tread", "tread_pitches",
                          "entry_flat_pitches"}, f"stairs[{i}]")
        if s["axis"] not in CARDINALS:
            raise WorldDocumentError(f"bad stair axis {s['axis']!r}")
        stairs.append(StairSpec(tuple(_cells(s["cells"], "stairs")), s["axis"],
                                float(s["rise_per_tread"]), int(s["tread_pitches"]),
                                int(s.get("entry_flat_pitches", 2))))

    n_cols, n_rows = coarse_dims
    base = np.zeros(coarse_dims)
    if "base_heights" in doc:
        arr = doc["base_heights"]
        if len(arr) != n_cols or any(len(col) != n_rows for col in arr):
            raise WorldDocumentError("base_heights must be coarse_dims shaped (columns of rows)")
        base = np.array(arr, dtype=float)

    parts, part_names = [], []
    for i, p in enumerate(doc["partitions"]):
        _require_keys(p, {"name", "cells"}, f"partitions[{i}]")
        parts.append(frozenset(_cells(p["cells"], f"partitions[{i}]")))
        part_names.append(str(p.get("name", f"p{i}")))

    _require_keys(doc["initial"], {"robot", "obstacle"}, "initial")
    _require_keys(doc["initial"]["robot"], {"cell", "heading"}, "initial.robot")
    robot = CoarseState(tuple(int(v) for v in doc["initial"]["robot"]["cell"]),
                        str(doc["initial"]["robot"]["heading"]))
    obstacle = tuple(int(v) for v in doc["initial"]["obstacle"])
    excluded = frozenset(_cells(doc.get("obstacle_excluded", []), "obstacle_excluded"))

    fine_heights = _build_fine_heights(coarse_dims, fine_dims, base, stairs, cell_size)

    env = Environment(
        coarse_dims=coarse_dims, coarse_cell_size=cell_size, fine_dims=fine_dims,
        static_obstacles=statics, goals=goals, stairs=tuple(stairs),
        partitions=tuple(parts), partition_names=tuple(part_names),
        visibility_radius=int(doc.get("visibility_radius", 2)),
        base_heights=base, fine_heights=fine_heights,
        initial_robot=robot, initial_obstacle=obstacle,
        obstacle_excluded=excluded, name=str(doc.get("name", "environment")),
    )
    _validate(env)
    return env


def _build_fine_heights(coarse_dims, fine_dims, base, stairs, cell_size) -> np.ndarray:
    fc, fr = fine_dims
    heights = np.zeros((coarse_dims[0] * fc, coarse_dims[1] * fr))
    for c in range(coarse_dims[0]):
        for r in range(coarse_dims[1]):
            heights[c * fc:(c + 1) * fc, r * fr:(r + 1) * fr] = base[c, r]
    for s in stairs:
        for cell in s.cells:
            c, r = cell
            lo = base[c, r]
            for i in range(fc):
                tread = max(0, (i - s.entry_flat_pitches) // s.tread_pitches + 1) \
                    if i >= s.entry_flat_pitches else 0
                h = lo + tread * s.rise_per_tread
                if s.axis == "E":
                    heights[c * fc + i, r * fr:(r + 1) * fr] = h
                elif s.axis == "W":
                    heights[(c + 1) * fc - 1 - i, r * fr:(r + 1) * fr] = h
                elif s.axis == "N":
                    heights[c * fc:(c + 1) * fc, r * fr + i] = h
                else:
                    heights[c * fc:(c + 1) * fc, (r + 1) * fr - 1 - i] = h
    return heights


def _validate(env: Environment):
    n_cols, n_rows = env.coarse_dims
    all_cells = {(c, r) for c in range(n_cols) for r in range(n_rows)}
    for cell in env.static_obstacles | {env.initial_obstacle} | set(env.goals):
        if not env.in_bounds(cell):
            raise WorldDocumentError(f"cell {cell} out of bounds")
    for g in env.goals:
        if g in env.static_obstacles:
            raise WorldDocumentError(f"goal {g} lies on a static obstacle")
    if env.initial_robot.cell in env.static_obstacles:
        raise WorldDocumentError("initial robot cell lies on a static obstacle")
    if not env.in_bounds(env.initial_robot.cell):
        raise WorldDocumentError("initial robot cell out of bounds")
    if env.initial_obstacle in env.static_obstacles or \
            env.initial_obstacle in env.obstacle_excluded:
        raise WorldDocumentError("initial obstacle cell not in its movement domain")

    covered = set()
    for p in env.partitions:
        if covered & p:
            raise WorldDocumentError("partitions overlap")
        covered |= p
    if covered != all_cells:
        missing = sorted(all_cells - covered)
        raise WorldDocumentError(f"partitions do not cover cells {missing[:5]}...")

    # traversable terrain: nominal straight footsteps only meet class-sized rises
    fc = env.fine_dims[0]
    h = env.fine_heights
    free_fine = np.zeros(h.shape, dtype=bool)
    x_ok = np.zeros(h.shape, dtype=bool)  # movement along x permitted here
    y_ok = np.zeros(h.shape, dtype=bool)
    for cell in env.free_cells():
        sl = (slice(cell[0] * fc, (cell[0] + 1) * fc), slice(cell[1] * fc, (cell[1] + 1) * fc))
        free_fine[sl] = True
        axis = env.stair_cell_axis(cell)
        x_ok[sl] = axis in (None, "E", "W")
        y_ok[sl] = axis in (None, "N", "S")
    classes = np.array(sorted(STEP_HEIGHT_CLASSES))
    for stride in (2, 3, 4):
        for dz, ok in ((h[stride:, :] - h[:-stride, :], x_ok[stride:, :] & x_ok[:-stride, :]),
                       (h[:, stride:] - h[:, :-stride], y_ok[:, stride:] & y_ok[:, :-stride])):
            bad = ok & (np.abs(dz[None] - classes[:, None, None]) > 1e-6).all(axis=0)
            if bad.any():
                raise WorldDocumentError(
                    f"untraversable terrain rise at stride {stride}: "
                    f"{np.argwhere(bad)[0].tolist()}")


def two_rooms_environment() -> Environment:
    """The bundled two-room scenario: uneven terrain, stairs, one roamer."""
    text = resources.files("bipednav.data").joinpath("two_rooms.yaml").read_text()
    return load_environment(text)
