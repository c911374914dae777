"""Command line entry points: synthesize, simulate, viability-map, check, serve."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .pendulum import PendulumParams


def _load_env(path):
    from .world import load_environment, two_rooms_environment

    if path is None:
        return two_rooms_environment()
    return load_environment(Path(path).read_text())


def cmd_check(args):
    """Verdicts for keyframe-transition records, one per input line.

    Line format: v_c, v_n, d, dtheta_deg, dy2, h_apex (comma separated).
    """
    from .safety import SteeringGeometry, check_balancing_safety

    text = sys.stdin.read() if args.file == "-" else Path(args.file).read_text()
    for lineno, line in enumerate(text.strip().splitlines(), 1):
        line = line.split("#")[0].strip()
        if not line:
            continue
        try:
            v_c, v_n, d, dth_deg, dy2, h_apex = (float(x) for x in line.split(","))
        except ValueError:
            print(f"{lineno}: malformed record", file=sys.stderr)
            continue
        params = PendulumParams(h_apex=h_apex)
        geom = SteeringGeometry(dy2, math.radians(dth_deg), d)
        try:
            v = check_balancing_safety(v_c, None, v_n, geom, params.omega)
            print(f"{lineno}: {'SAFE' if v.safe else 'UNSAFE'} "
                  f"rule={v.violated_rule.value} margin={v.margin:.6f}")
        except ValueError as e:
            print(f"{lineno}: ERROR {e}")
    return 0


def cmd_viability_map(args):
    """Sample the keyframe transition map and write it as CSV."""
    from .keyframe import Action, PolicyConfig, build_viability_map

    config = PolicyConfig()
    actions = []
    for d in args.step_lengths:
        for deg in args.headings:
            actions.append(Action(d=d, delta_theta=math.radians(deg)))
    samples = build_viability_map(config, actions, grid=args.resolution)
    lines = ["d,dtheta_deg,v_apex,dy2_c,dy1_n,dy2_n,viable"]
    for s in samples:
        lines.append(
            f"{s.action.d:.4f},{math.degrees(s.action.delta_theta):.1f},"
            f"{s.s_c.v_apex:.4f},{s.delta_y2_c:.4f},{s.delta_y1_n:.5f},"
            f"{s.delta_y2_n:.5f},{int(s.viable)}")
    out = Path(args.out)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(samples)} samples to {out}")
    if args.plot:
        _plot_map(samples, args.plot)
    return 0


def _plot_map(samples, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    keys = sorted({(s.action.d, s.action.delta_theta) for s in samples})
    fig, axes = plt.subplots(1, len(keys), figsize=(4.5 * len(keys), 4),
                             squeeze=False)
    for ax, key in zip(axes[0], keys):
        pts = [s for s in samples if (s.action.d, s.action.delta_theta) == key]
        ok = [(s.s_c.v_apex, s.delta_y2_c) for s in pts if s.viable]
        bad = [(s.s_c.v_apex, s.delta_y2_c) for s in pts if not s.viable]
        if bad:
            ax.plot(*zip(*bad), ".", ms=2, color="0.8")
        if ok:
            ax.plot(*zip(*ok), ".", ms=3, color="tab:blue")
        ax.set_title(f"d={key[0]:.2f} m, heading change {math.degrees(key[1]):.1f} deg")
        ax.set_xlabel("apex velocity (m/s)")
        ax.set_ylabel("lateral offset (m)")
    fig.tight_layout()
    fig.savefig(path)
    print(f"wrote surface plot to {path}")


def cmd_synthesize(args):
    from .belief import build_belief_game
    from .games import encode_navigation_game
    from .gr1 import Unrealizable, solve_gr1

    env = _load_env(args.env)
    if args.no_belief:
        game, spec = encode_navigation_game(env)
    else:
        game, spec = build_belief_game(env)
    out = solve_gr1(game, spec)
    if isinstance(out, Unrealizable):
        print(f"UNREALIZABLE: {out.reason} (winning states: {out.winning_states})")
        return 1
    Path(args.out).write_text(out.export_text())
    print(f"REALIZABLE: strategy over {len(out.winning)} states written to {args.out}")
    return 0


def cmd_simulate(args):
    from .simulate import (
        AdversarialObstacle,
        Planner,
        RandomLegalObstacle,
        ScriptedObstacle,
        run_episode,
    )

    env = _load_env(args.env)
    planner = Planner(env)
    if args.obstacle == "random":
        model = RandomLegalObstacle(env, seed=args.seed)
    elif args.obstacle == "adversarial":
        model = AdversarialObstacle(env, seed=args.seed)
    else:
        path = [tuple(int(v) for v in p.split(",")) for p in args.path.split(";")] \
            if args.path else []
        model = ScriptedObstacle(env, path, seed=args.seed)
    trace = run_episode(env, planner, model, max_ticks=args.ticks,
                        collect_trajectories=bool(args.figures))
    print(f"outcome={trace.outcome} ticks={trace.ticks} "
          f"goal_visits={trace.goal_visits} keyframes={len(trace.records)}")
    if args.out:
        trace.write_jsonl(args.out)
        print(f"trace written to {args.out}")
    if args.figures:
        from .figures import emit_figures

        for p in emit_figures(trace, args.figures, env=env):
            print(f"figure: {p}")
    return 0 if trace.outcome == "goals_complete" else 2


def cmd_serve(args):
    from .server import serve_session
    from .simulate import Planner

    env = _load_env(args.env)
    print("synthesizing planner...", flush=True)
    planner = Planner(env)
    server = serve_session(env, planner, port=args.port, max_ticks=args.ticks)
    print(f"session service on 127.0.0.1:{args.port} (ctrl-c to stop)", flush=True)
    try:
        import time

        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="bipednav",
        description="Safe bipedal navigation: planning, synthesis, simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="balancing-safety verdicts for transition records")
    p.add_argument("file", help="records file, or - for stdin")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("viability-map", help="sample the keyframe transition map")
    p.add_argument("--out", default="viability_map.csv")
    p.add_argument("--resolution", type=int, default=60)
    p.add_argument("--step-lengths", type=float, nargs="+", default=[0.3, 0.4])
    p.add_argument("--headings", type=float, nargs="+", default=[22.5])
    p.add_argument("--plot", default=None, help="optional surface plot path")
    p.set_defaults(func=cmd_viability_map)

    p = sub.add_parser("synthesize", help="synthesize the navigation strategy")
    p.add_argument("--env", default=None, help="environment document (default: bundled)")
    p.add_argument("--out", default="strategy.txt")
    p.add_argument("--no-belief", action="store_true",
                   help="fully observable variant")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="run closed-loop episodes")
    p.add_argument("--env", default=None)
    p.add_argument("--obstacle", choices=["random", "adversarial", "scripted"],
                   default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ticks", type=int, default=400)
    p.add_argument("--path", default=None, help="scripted cells, e.g. '8,2;8,1'")
    p.add_argument("--out", default=None, help="trace output (jsonl)")
    p.add_argument("--figures", default=None, help="figure output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="interactive adversary session service")
    p.add_argument("--env", default=None)
    p.add_argument("--port", type=int, default=7345)
    p.add_argument("--ticks", type=int, default=400)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
