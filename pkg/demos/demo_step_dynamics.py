"""Walk through the closed-form step dynamics.

Plans a single walking step, prints the switch location and phase times,
verifies the orbit integral by sampling, and renders the two phase portraits
with their asymptote boundaries.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from bipednav import Action, PendulumParams, first_integral, plan_step

params = PendulumParams(g=9.81, h_apex=1.0)
w = params.omega
print(f"asymptote slope: {w:.4f} 1/s")

# a nominal straight step: equal apex velocities mirror the lateral offset
plan = plan_step(v_c=0.4, delta_y2_c=0.1, action=Action(d=0.4), v_n=0.4,
                 params=params)
print(f"switch at x = {plan.x_switch:.4f} m, phase times "
      f"{plan.t1:.3f} + {plan.t2:.3f} s")
print(f"next-step offsets: tracking {plan.delta_y1_n:+.4f} m, "
      f"stance {plan.delta_y2_n:+.4f} m")

# the orbit integral is conserved through the step
e_x = first_integral(plan.x0, plan.vx0, 0.0, w)
e_sw = first_integral(plan.x_switch, plan.v_switch, 0.0, w)
print(f"sagittal orbit integral: {e_x:.6f} at apex, {e_sw:.6f} at switch")

# steering step: the apex state re-expressed in the turned frame is no
# longer an apex, which is where the steering velocity window comes from
steer = plan_step(0.25, 0.1, Action(d=0.3, delta_theta=math.radians(22.5)),
                  0.25, params)
print(f"steering: reframed start x0={steer.x0:.4f}, vy0={steer.vy0:+.4f}; "
      f"offsets {steer.delta_y1_n:+.4f}/{steer.delta_y2_n:+.4f}")

# portraits
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, (a, b, foot, title) in zip(axes, [
    (plan.x0, plan.vx0, 0.0, "sagittal phase 1"),
    (plan.y0, plan.vy0, 0.0, "lateral phase 1"),
]):
    e = first_integral(a, b, foot, w)
    xs = np.linspace(-0.3, 0.5, 200)
    ax.plot(xs, w * xs, "k--", lw=0.8)
    ax.plot(xs, -w * xs, "k--", lw=0.8)
    vv = e + w**2 * (xs - foot) ** 2
    mask = vv >= 0
    ax.plot(xs[mask], np.sqrt(vv[mask]), color="tab:blue")
    ax.set_title(title)
    ax.set_xlabel("position (m)")
    ax.set_ylabel("velocity (m/s)")
fig.tight_layout()
fig.savefig("demo_step_dynamics.svg")
print("wrote demo_step_dynamics.svg")
