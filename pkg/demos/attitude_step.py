# Hexarotor attitude step: 10 deg roll, -5 deg pitch, -90 deg yaw from level hover.
#
# Run:  python demos/attitude_step.py    (writes demos/out/attitude_step.svg)

from pathlib import Path

import numpy as np

from arcad import load_scenario, response_metrics, run_scenario
from arcad.scenario import render_plots

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

spec = load_scenario("hex_attitude_step")
print("strategy:", spec.controller.strategy.value)
print("attitude kp:", spec.controller.attitude.kp, "kd:", spec.controller.attitude.kd)

log = run_scenario(spec)
goal = spec.waypoints[-1].attitude
for name, target in zip(("roll", "pitch", "yaw"), goal):
    m = response_metrics(log.t, log[f"state.{name}"], 0.0, target)
    print(f"{name:5s} -> {target:6.1f} deg: rise {m.rise_time:.3f} s  settle {m.settling_time:.3f} s"
          f"  overshoot {m.overshoot:5.1f} %  sse {m.steady_state_error:.1e} deg")

# The fully-actuated body rotates while holding position.
drift = np.sqrt(log["state.x"] ** 2 + log["state.y"] ** 2 + (log["state.z"] + 1) ** 2).max()
print("worst position excursion during the step: %.4f m" % drift)

render_plots(log, ["state.roll", "state.pitch", "state.yaw"], out / "attitude_step.svg")
