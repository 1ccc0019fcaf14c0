# Force polytopes, the omnidirectional acceleration ball and a horizontal cut.
#
# Run:  python demos/wrench_sets.py     (writes demos/out/*.off and *.svg)

from pathlib import Path

import numpy as np

from arcad import (acceleration_set, build_allocation_matrix, cross_section,
                   lateral_force_radius, omni_radius, wrench_set)
from arcad.airframe import flat_quadrotor, tilted_hexarotor
from arcad.analysis import section_to_svg

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# %% The quadrotor force set collapses to a vertical segment.
quad = flat_quadrotor()
Pq = wrench_set(build_allocation_matrix(quad), quad.thrust_limits)
print("quadrotor force set: dimension", Pq.affine_dimension, "vertices", Pq.vertices.tolist())
print("omni radius:", omni_radius(acceleration_set(Pq, quad.mass)))

# %% The hexarotor spans a solid. Opposite arms carry parallel rotor axes,
# so the zonotope is a parallelepiped with 8 vertices.
hexa = tilted_hexarotor()
B = build_allocation_matrix(hexa)
P = wrench_set(B, hexa.thrust_limits)
print("hexarotor force set: %d vertices, %d facets, volume %.1f N^3"
      % (len(P.vertices), len(P.faces), P.volume()))
(out / "hexarotor_force.off").write_text(P.to_off())

M = wrench_set(B, hexa.thrust_limits, "moment")
print("moment set volume %.4f (N m)^3" % M.volume())

A = acceleration_set(P, hexa.mass)
print("omnidirectional acceleration radius: %.3f m/s^2" % omni_radius(A))
print("lateral force at hover: %.3f N" % lateral_force_radius(P, hexa.mass))

# %% Horizontal slices of the force set, from light to heavy vertical load.
for fz in (-5.0, -19.62, -40.0, -60.0):
    sec = cross_section(P, (0, 0, 1), fz)
    print(f"fz = {fz:7.2f} N: {len(sec.polygon)}-gon, area {sec.area:8.2f} N^2")
    (out / f"section_fz{fz:g}.svg").write_text(section_to_svg(sec, label=f"fz = {fz:g} N"))

# %% A dihedral ramp around the airframe breaks the parallel pairs; the set grows more facets.
from arcad import AirframeModel, RotorSpec  # noqa: E402

rotors = [RotorSpec(placement_angle=r.placement_angle, arm_length=r.arm_length,
                    spin_direction=r.spin_direction, sideward_angle=r.sideward_angle,
                    dihedral_angle=4.0 * i, thrust_max=r.thrust_max)
          for i, r in enumerate(hexa.rotors)]
mixed = AirframeModel(hexa.mass, hexa.inertia, rotors)
Pm = wrench_set(build_allocation_matrix(mixed), mixed.thrust_limits)
print("with a 0..20 deg dihedral ramp: %d vertices, %d facets" % (len(Pm.vertices), len(Pm.faces)))
print("omni radius %.3f m/s^2" % omni_radius(acceleration_set(Pm, mixed.mass)))
