"""Reproduce the steering viability surfaces.

Samples the keyframe transition map over apex velocity and lateral stance
offset for two step lengths and two heading changes, and plots the viable
sets side by side. Shorter steps and shallower turns admit visibly larger
regions; at a 45-degree heading change the admissible velocity window
collapses, which is why quarter turns take four steps.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from bipednav import Action, PolicyConfig, build_viability_map

config = PolicyConfig()
cases = [
    ("d=0.3 m, 22.5 deg", Action(d=0.3, delta_theta=math.radians(22.5))),
    ("d=0.4 m, 22.5 deg", Action(d=0.4, delta_theta=math.radians(22.5))),
    ("d=0.3 m, 45 deg", Action(d=0.3, delta_theta=math.radians(45) - 1e-9)),
]

fig, axes = plt.subplots(1, 3, figsize=(13, 4), sharey=True)
for ax, (label, action) in zip(axes, cases):
    samples = build_viability_map(config, [action], grid=60)
    ok = [(s.s_c.v_apex, s.delta_y2_c) for s in samples if s.viable]
    bad = [(s.s_c.v_apex, s.delta_y2_c) for s in samples if not s.viable]
    if bad:
        ax.plot(*zip(*bad), ".", ms=2, color="0.85")
    if ok:
        ax.plot(*zip(*ok), ".", ms=3, color="tab:blue")
    ax.set_title(f"{label}: {len(ok)} viable")
    ax.set_xlabel("apex velocity (m/s)")
axes[0].set_ylabel("lateral stance offset (m)")
fig.tight_layout()
fig.savefig("demo_viability_surfaces.svg")
print("wrote demo_viability_surfaces.svg")
