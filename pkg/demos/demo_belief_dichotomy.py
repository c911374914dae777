"""Why belief tracking matters.

Solves the navigation game twice: once with the partitioned belief
abstraction and once believing the blocker could be in any non-visible
cell. Only the first is synthesizable; the second cannot rule out a
blocker lurking right behind the wall.
"""

from bipednav.belief import build_belief_game, single_partition_environment
from bipednav.gr1 import Unrealizable, solve_gr1
from bipednav.world import two_rooms_environment

env = two_rooms_environment()
for label, e in [("partition tracking", env),
                 ("anywhere non-visible", single_partition_environment(env))]:
    game, spec = build_belief_game(e)
    out = solve_gr1(game, spec)
    if isinstance(out, Unrealizable):
        print(f"{label}: UNREALIZABLE ({game.n_states} states, "
              f"{out.winning_states} winning)")
    else:
        print(f"{label}: realizable, strategy over {len(out.winning)} states")
