# Allocation matrices for a flat quadrotor and a tilted-arm hexarotor.
#
# Run:  python demos/allocation_and_hover.py

import numpy as np

from arcad import build_allocation_matrix, hover_feasible, rotor_axis
from arcad.airframe import flat_quadrotor, tilted_hexarotor

np.set_printoptions(precision=4, suppress=True)

# %% A conventional X quadrotor: every rotor points straight up, so the
# force rows are identical and the matrix has rank 4.
quad = flat_quadrotor(mass=1.0)
Bq = build_allocation_matrix(quad).matrix
print("quadrotor allocation (rows fx fy fz mx my mz):")
print(Bq)
print("rank:", np.linalg.matrix_rank(Bq))

hov = hover_feasible(quad)
print("hover thrusts:", hov.hover_thrusts, "N")

# Four times heavier, the same rotors can no longer hold it up.
print("m = 4 kg feasible?", hover_feasible(flat_quadrotor(mass=4.0)).feasible)

# %% The hexarotor tilts alternate arms by -30/+30 degrees about the arm axis.
# Each rotor now contributes a lateral force and the matrix is square and full rank.
hexa = tilted_hexarotor()
for i, r in enumerate(hexa.rotors):
    print(f"rotor {i + 1}: angle {r.placement_angle:5.0f} deg  axis {rotor_axis(r)}")

Bh = build_allocation_matrix(hexa).matrix
s = np.linalg.svd(Bh, compute_uv=False)
print("hexarotor singular values:", s)
print("condition number: %.2f" % (s[0] / s[-1]))

# Lateral thrust components cancel with equal thrusts; only 6 cos(30) N remains vertical.
print("force at 1 N per rotor:", Bh[:3] @ np.ones(6))

# %% A lateral force without tilting the body: pure pseudo-inverse allocation.
w = np.array([2.0, 0.0, -hexa.mass * 9.81, 0.0, 0.0, 0.0])
u = np.linalg.solve(Bh, w)
print("thrusts for 2 N sideways at hover:", u)
print("residual:", np.abs(Bh @ u - w).max())
