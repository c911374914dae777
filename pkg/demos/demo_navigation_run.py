"""Full closed-loop run in the bundled two-room world.

Synthesizes the belief-tracking navigation strategy and the per-cell
stepping strategies, then plays one episode against an adversarial blocker,
writing the trace and the figure set.
"""

from bipednav.figures import emit_figures
from bipednav.simulate import AdversarialObstacle, Planner, run_episode
from bipednav.world import two_rooms_environment

env = two_rooms_environment()
print(f"world: {env.coarse_dims[0]}x{env.coarse_dims[1]} cells, "
      f"{len(env.partitions)} belief partitions, stairs at column 4")

print("synthesizing strategies...")
planner = Planner(env)
print(f"navigation game: {planner.nav_game.n_states} states, "
      f"{len(planner.nav_strategy.winning)} winning")

trace = run_episode(env, planner, AdversarialObstacle(env, seed=7),
                    collect_trajectories=True)
print(f"outcome: {trace.outcome} after {trace.ticks} ticks, "
      f"{len(trace.records)} keyframes, goal visits {trace.goal_visits}")

trace.write_jsonl("demo_trace.jsonl")
for p in emit_figures(trace, "demo_figures", env=env):
    print(f"figure: {p}")
