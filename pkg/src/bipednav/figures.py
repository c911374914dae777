"""Figure emission from simulation traces: phase portraits with the
analytic safety-region boundaries, a top-down path plot, and a grid/belief
snapshot.  All files are vector graphics."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle, Rectangle

from .pendulum import PendulumParams
from .world import Environment


def emit_figures(trace, out_dir, env: Environment | None = None,
                 params: PendulumParams | None = None) -> list[str]:
    """Write the figure set for a trace; returns the file paths."""
    if not trace.records:
        raise ValueError("cannot plot an empty trace")
    params = params or PendulumParams()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [
        _phase_portraits(trace, out / "phase_portraits.svg", params),
        _top_down(trace, out / "top_down.svg", env),
    ]
    if env is not None:
        paths.append(_grid_snapshot(trace, out / "grid_belief.svg", env))
    return [str(p) for p in paths]


def _phase_portraits(trace, path, params):
    """Sagittal and lateral portraits per step, inside the saddle sectors.

    The dashed asymptotes bound the safe sectors: sagittal orbits must
    stay above them (crossing orbits), lateral orbits between them.
    """
    w = params.omega
    fig, (ax_s, ax_l) = plt.subplots(1, 2, figsize=(10, 4.2))
    span_x, span_v = 0.0, 0.0
    for traj in trace.trajectories:
        for seg in traj.segments:
            t0, t1 = seg.t_span
            ts = np.linspace(t0, min(t1, t0 + 2.0), 40)
            ex = np.exp(w * ts)
            px = seg.coeff_a_x * ex + seg.coeff_b_x / ex
            vx = w * (seg.coeff_a_x * ex - seg.coeff_b_x / ex)
            py = seg.coeff_a_y * ex + seg.coeff_b_y / ex
            vy = w * (seg.coeff_a_y * ex - seg.coeff_b_y / ex)
            ax_s.plot(px, vx, lw=0.7, color="tab:blue", alpha=0.6)
            ax_l.plot(py, vy, lw=0.7, color="tab:red", alpha=0.6)
            span_x = max(span_x, float(np.max(np.abs(px))), float(np.max(np.abs(py))))
            span_v = max(span_v, float(np.max(np.abs(vx))), float(np.max(np.abs(vy))))
    span_x = max(span_x * 1.1, 0.3)
    xs = np.linspace(-span_x, span_x, 9)
    for ax, title in ((ax_s, "sagittal (rel. stance foot)"), (ax_l, "lateral (rel. stance foot)")):
        ax.plot(xs, w * xs, "k--", lw=0.8)
        ax.plot(xs, -w * xs, "k--", lw=0.8)
        ax.set_xlabel("position (m)")
        ax.set_ylabel("velocity (m/s)")
        ax.set_title(title)
        ax.grid(alpha=0.2)
    # shade the safe sectors
    ax_s.fill_between(xs, w * np.abs(xs), span_v * 1.2, color="tab:blue", alpha=0.06)
    ax_l.fill_between(xs, -w * np.abs(xs), w * np.abs(xs), color="tab:red", alpha=0.06)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _top_down(trace, path, env):
    fig, ax = plt.subplots(figsize=(9, 4.5))
    if env is not None:
        _draw_grid(ax, env)
    xs = [r.position[0] for r in trace.records]
    ys = [r.position[1] for r in trace.records]
    ax.plot(xs, ys, "-", color="tab:blue", lw=1.2, label="CoM apexes")
    ax.plot(xs[0], ys[0], "o", color="tab:blue")
    if env is not None:
        size = env.coarse_cell_size
        ox = [(r.obstacle[0] + 0.5) * size for r in trace.records]
        oy = [(r.obstacle[1] + 0.5) * size for r in trace.records]
        ax.plot(ox, oy, ":", color="tab:orange", lw=1.2, label="blocker")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _draw_grid(ax, env):
    size = env.coarse_cell_size
    for c in range(env.coarse_dims[0]):
        for r in range(env.coarse_dims[1]):
            face = "0.95"
            if (c, r) in env.static_obstacles:
                face = "0.25"
            elif env.stair_cell_axis((c, r)):
                face = "0.8"
            ax.add_patch(Rectangle((c * size, r * size), size, size,
                                   facecolor=face, edgecolor="0.7", lw=0.4))
    for g, color in zip(env.goals, ("tab:green", "tab:olive")):
        ax.add_patch(Rectangle((g[0] * size, g[1] * size), size, size,
                               facecolor=color, alpha=0.4))
    ax.set_xlim(0, env.coarse_dims[0] * size)
    ax.set_ylim(0, env.coarse_dims[1] * size)


def _grid_snapshot(trace, path, env):
    """Final-tick snapshot with the belief overlay."""
    from .belief import BeliefState, belief_cells

    fig, ax = plt.subplots(figsize=(9, 4.5))
    _draw_grid(ax, env)
    size = env.coarse_cell_size
    last = trace.records[-1]
    belief = BeliefState.from_key(last.belief)
    for cell in belief_cells(belief, env):
        ax.add_patch(Rectangle((cell[0] * size, cell[1] * size), size, size,
                               facecolor="0.5", alpha=0.55))
    ax.add_patch(Circle(((last.coarse[0] + 0.5) * size, (last.coarse[1] + 0.5) * size),
                        size * 0.3, color="tab:blue"))
    ax.add_patch(Circle(((last.obstacle[0] + 0.5) * size, (last.obstacle[1] + 0.5) * size),
                        size * 0.3, color="tab:orange"))
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title(f"tick {last.tick}: belief overlay")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
