# Push a 5 N force into a wall with the hybrid force/position controller,
# then write the letters A, I, R on it.
#
# Run:  python demos/wall_contact.py    (about a minute; writes demos/out/)

from pathlib import Path

import numpy as np

from arcad import load_scenario, run_scenario
from arcad.scenario import export_csv, render_plots

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# %% Approach, touch, and regulate the contact force.
spec = load_scenario("hex_wall_5N")
wall = spec.environment.obstacles[0]
print("wall at x = %.1f m, stiffness %.0f N/m" % (wall.point[0], wall.contact.stiffness))
log = run_scenario(spec)

touch = np.flatnonzero(log["ee.contact"] > 0)
print("first contact at t = %.2f s" % log.t[touch[0]])
tail = log.t >= spec.duration - 2
print("force over the last 2 s: %.4f .. %.4f N" % (log["ee.fx"][tail].min(), log["ee.fx"][tail].max()))
render_plots(log, ["state.x", "state.pitch", "ee.fx"], out / "wall_5N.svg")

# %% Writing: pen-up moves off the wall, pen-down strokes at 5 N.
air = load_scenario("hex_write_AIR")
print("AIR trajectory:", len(air.waypoints), "waypoints")
log = run_scenario(air)
down = log["ctrl.force_active"] > 0
print("strokes in contact: %.1f s of %.1f s" % (down.sum() * air.dt, air.duration))
print("median stroke force: %.3f N" % np.median(log["ee.fx"][down & (log["ee.contact"] > 0)]))
print("finished:", bool(log["ctrl.finished"][-1]))

# The tip trace in the wall plane spells the word.
y, z = log["ee.y"][down], -log["ee.z"][down]
print("tip extent: y %.2f..%.2f m, height %.2f..%.2f m" % (y.min(), y.max(), z.min(), z.max()))
export_csv(log, out / "air.csv")
render_plots(log, ["ee.y", "ee.z", "ee.fx"], out / "air.svg")
