"""Declarative multirotor description and control-allocation generation.

Frames are front-right-down (body) and north-east-down (inertial). Each rotor
produces thrust along its axis, which is (0, 0, -1) for an untilted rotor, and
a reaction moment ``spin_direction * torque_to_thrust`` per newton of thrust
about the same axis.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .rotations import axis_angle

GRAVITY = 9.81


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class RotorSpec:
    placement_angle: float  # deg, from +x toward +y
    arm_length: float = 0.25
    arm_z_offset: float = 0.0
    spin_direction: int = 1
    sideward_angle: float = 0.0  # deg, about the radial arm axis
    dihedral_angle: float = 0.0  # deg, about the tangential axis
    inward_angle: float = 0.0  # deg, subtracted from the dihedral
    thrust_min: float = 0.0
    thrust_max: float = 10.0
    torque_to_thrust: float = 0.016
    motor_time_constant: float = 0.02
    tiltable: bool = False


@dataclass(frozen=True)
class EndEffectorSpec:
    mount_point: np.ndarray = field(default_factory=lambda: np.zeros(3))
    direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    length: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mount_point", np.asarray(self.mount_point, dtype=float))
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float))

    @cached_property
    def tip_offset(self):
        """Body-frame vector from the center of mass to the tool tip."""
        return self.mount_point + self.length * self.direction

    @cached_property
    def frame(self):
        """Columns are the end-effector x, y, z axes in body coordinates.

        x points along the tool; y is chosen horizontal in the body frame
        whenever the tool is not vertical.
        """
        x = self.direction / np.linalg.norm(self.direction)
        ref = np.array([0.0, 0.0, 1.0]) if abs(x[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        y = np.cross(ref, x)
        y /= np.linalg.norm(y)
        z = np.cross(x, y)
        return np.column_stack([x, y, z])


@dataclass(frozen=True)
class AirframeModel:
    mass: float
    inertia: np.ndarray
    rotors: tuple
    end_effector: Optional[EndEffectorSpec] = None
    linear_drag: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float).reshape(3, 3))
        object.__setattr__(self, "rotors", tuple(self.rotors))
        object.__setattr__(self, "linear_drag", np.asarray(self.linear_drag, dtype=float))

    @property
    def n_rotors(self):
        return len(self.rotors)

    @cached_property
    def inertia_inv(self):
        return np.linalg.inv(self.inertia)

    @cached_property
    def thrust_limits(self):
        lo = np.array([r.thrust_min for r in self.rotors], dtype=float)
        hi = np.array([r.thrust_max for r in self.rotors], dtype=float)
        return lo, hi

    @cached_property
    def time_constants(self):
        return np.array([r.motor_time_constant for r in self.rotors], dtype=float)

    @cached_property
    def tiltable(self):
        return np.array([r.tiltable for r in self.rotors], dtype=bool)


@dataclass(frozen=True)
class AllocationMatrix:
    """6 x n map from rotor thrusts (N) to body force (N) and moment (N m)."""
    matrix: np.ndarray

    @property
    def force_rows(self):
        return self.matrix[:3]

    @property
    def moment_rows(self):
        return self.matrix[3:]

    @property
    def n_rotors(self):
        return self.matrix.shape[1]


def rotor_axis(rotor, servo_angle=0.0):
    """Unit thrust direction of `rotor` in the body frame."""
    theta = np.radians(rotor.placement_angle)
    radial = np.array([np.cos(theta), np.sin(theta), 0.0])
    tangential = np.array([-np.sin(theta), np.cos(theta), 0.0])  # z_hat x radial

    dihedral = np.radians(rotor.dihedral_angle - rotor.inward_angle)
    sideward = rotor.sideward_angle + (servo_angle if rotor.tiltable else 0.0)

    n = np.array([0.0, 0.0, -1.0])
    n = axis_angle(tangential, dihedral) @ n
    n = axis_angle(radial, np.radians(sideward)) @ n
    return n / np.linalg.norm(n)


def rotor_position(rotor):
    theta = np.radians(rotor.placement_angle)
    return np.array([rotor.arm_length * np.cos(theta),
                     rotor.arm_length * np.sin(theta),
                     rotor.arm_z_offset])


def build_allocation_matrix(airframe, servo_angles=None):
    n = airframe.n_rotors
    if servo_angles is None:
        servo_angles = np.zeros(n)
    servo_angles = np.asarray(servo_angles, dtype=float).ravel()
    if servo_angles.shape[0] != n:
        raise DimensionError(f"expected {n} servo angles, got {servo_angles.shape[0]}")

    B = np.empty((6, n))
    for i, (rotor, servo) in enumerate(zip(airframe.rotors, servo_angles)):
        axis = rotor_axis(rotor, servo)
        pos = rotor_position(rotor)
        B[:3, i] = axis
        B[3:, i] = np.cross(pos, axis) + rotor.spin_direction * rotor.torque_to_thrust * axis
    return AllocationMatrix(B)


def hover_wrench(mass, gravity=GRAVITY):
    return np.array([0.0, 0.0, -mass * gravity, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class HoverResult:
    feasible: bool
    hover_thrusts: Optional[np.ndarray]


def hover_feasible(airframe, B=None, gravity=GRAVITY):
    """Decide whether some thrust vector inside the rotor box produces hover.

    The minimum-norm solution is returned when it already lies in the box;
    otherwise feasibility is settled by a phase-1 simplex.
    """
    if B is None:
        B = build_allocation_matrix(airframe)
    A = B.matrix if isinstance(B, AllocationMatrix) else np.asarray(B)
    target = hover_wrench(airframe.mass, gravity)
    lo, hi = airframe.thrust_limits

    u = np.linalg.pinv(A, rcond=1e-9) @ target
    if np.all(u >= lo) and np.all(u <= hi) and np.max(np.abs(A @ u - target)) < 1e-10:
        return HoverResult(True, u)

    s = box_equality_feasible(A, target - A @ lo, hi - lo)
    if s is None:
        return HoverResult(False, None)
    return HoverResult(True, lo + s)


def box_equality_feasible(A, b, width, tol=1e-9):
    """Find s with A s = b and 0 <= s <= width, or None if there is none.

    Dense tableau simplex with Bland's rule; sized for a handful of rotors.
    """
    m, n = A.shape
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # columns: s (n), t (n, slack of s <= width), artificials (m)
    rows = m + n
    cols = 2 * n + m
    T = np.zeros((rows, cols))
    rhs = np.zeros(rows)
    T[:m, :n] = A
    T[:m, 2 * n:] = np.eye(m)
    rhs[:m] = b
    T[m:, :n] = np.eye(n)
    T[m:, n:2 * n] = np.eye(n)
    rhs[m:] = width
    basis = list(range(2 * n, 2 * n + m)) + list(range(n, 2 * n))

    cost = np.zeros(cols)
    cost[2 * n:] = 1.0
    scale = max(1.0, np.max(np.abs(b)), np.max(np.abs(width)))

    for _ in range(50 * cols):
        cb = cost[basis]
        reduced = cost - cb @ T
        entering = next((j for j in range(cols) if reduced[j] < -tol), None)
        if entering is None:
            break
        col = T[:, entering]
        ratios = [(rhs[i] / col[i], basis[i], i) for i in range(rows) if col[i] > tol]
        if not ratios:
            break  # unbounded cannot happen for a bounded phase-1 problem
        _, _, leave = min(ratios)
        piv = T[leave, entering]
        T[leave] /= piv
        rhs[leave] /= piv
        for i in range(rows):
            if i != leave and T[i, entering] != 0.0:
                f = T[i, entering]
                T[i] -= f * T[leave]
                rhs[i] -= f * rhs[leave]
        basis[leave] = entering

    if sum(rhs[i] for i, j in enumerate(basis) if j >= 2 * n) > tol * scale:
        return None

    x = np.zeros(cols)
    for i, j in enumerate(basis):
        x[j] = rhs[i]
    s = np.clip(x[:n], 0.0, width)
    # the tableau drifts by a few ulps; one least-squares correction recovers them
    r = b - A @ s
    s = np.clip(s + np.linalg.pinv(A, rcond=1e-12) @ r, 0.0, width)
    return s


def validate_airframe(airframe, gravity=GRAVITY):
    """Return a list of human-readable invariant violations (empty when valid)."""
    problems = []
    if not airframe.mass > 0:
        problems.append(f"mass must be > 0 (got {airframe.mass})")

    inertia = np.asarray(airframe.inertia, dtype=float)
    if inertia.shape != (3, 3):
        problems.append(f"inertia must be 3x3 (got shape {inertia.shape})")
    else:
        if np.linalg.norm(inertia - inertia.T) >= 1e-9:
            problems.append("inertia must be symmetric")
        elif np.min(np.linalg.eigvalsh(inertia)) <= 0:
            problems.append("inertia must be positive definite")

    if len(airframe.linear_drag) != 3:
        problems.append("linear_drag must have 3 entries")
    elif np.any(airframe.linear_drag < 0):
        problems.append("linear_drag entries must be >= 0")

    if not airframe.rotors:
        problems.append("at least one rotor is required")

    for i, r in enumerate(airframe.rotors):
        tag = f"rotor[{i}]"
        if not 0 <= r.thrust_min < r.thrust_max:
            problems.append(f"{tag}: need 0 <= thrust_min < thrust_max "
                            f"(got [{r.thrust_min}, {r.thrust_max}])")
        if r.arm_length < 0:
            problems.append(f"{tag}: arm_length must be >= 0")
        if r.torque_to_thrust < 0:
            problems.append(f"{tag}: torque_to_thrust must be >= 0")
        if not r.motor_time_constant > 0:
            problems.append(f"{tag}: motor_time_constant must be > 0")
        if r.spin_direction not in (1, -1):
            problems.append(f"{tag}: spin_direction must be +1 or -1")

    ee = airframe.end_effector
    if ee is not None:
        if abs(np.linalg.norm(ee.direction) - 1.0) > 1e-9:
            problems.append("end_effector.direction must be a unit vector")
        if ee.length < 0:
            problems.append("end_effector.length must be >= 0")

    if not problems and not hover_feasible(airframe, gravity=gravity).feasible:
        problems.append("hover is infeasible within the rotor thrust limits")
    return problems


def symmetric_multirotor(placement_angles, spin_directions, *, arm_length=0.25,
                         sideward_angles=0.0, dihedral_angles=0.0, inward_angles=0.0,
                         thrust_min=0.0, thrust_max=10.0, torque_to_thrust=0.016,
                         motor_time_constant=0.02, mass=1.0, inertia=None,
                         end_effector=None, linear_drag=(0.0, 0.0, 0.0)):
    """Convenience constructor: one rotor per placement angle, scalars broadcast."""
    n = len(placement_angles)

    def per_rotor(v):
        return np.broadcast_to(np.asarray(v, dtype=float), (n,))

    side, dih, inw = per_rotor(sideward_angles), per_rotor(dihedral_angles), per_rotor(inward_angles)
    rotors = [
        RotorSpec(placement_angle=float(a), arm_length=arm_length, spin_direction=int(d),
                  sideward_angle=float(side[i]), dihedral_angle=float(dih[i]),
                  inward_angle=float(inw[i]), thrust_min=thrust_min, thrust_max=thrust_max,
                  torque_to_thrust=torque_to_thrust, motor_time_constant=motor_time_constant)
        for i, (a, d) in enumerate(zip(placement_angles, spin_directions))
    ]
    if inertia is None:
        inertia = np.diag([0.02, 0.02, 0.04])
    return AirframeModel(mass=mass, inertia=inertia, rotors=rotors,
                         end_effector=end_effector, linear_drag=linear_drag)


def flat_quadrotor(mass=1.0, thrust_max=8.0, arm_length=0.25, torque_to_thrust=0.016):
    return symmetric_multirotor([45, 135, 225, 315], [1, -1, 1, -1], arm_length=arm_length,
                                thrust_max=thrust_max, torque_to_thrust=torque_to_thrust,
                                mass=mass)


def tilted_hexarotor(mass=2.0, thrust_max=12.0, arm_length=0.4, torque_to_thrust=0.016,
                     end_effector=None):
    """Fully-actuated hexarotor with arms tilted alternately by -/+30 degrees."""
    if end_effector is None:
        end_effector = EndEffectorSpec(mount_point=[0.2, 0.0, 0.0], direction=[1.0, 0.0, 0.0],
                                       length=0.3)
    return symmetric_multirotor([30, 90, 150, 210, 270, 330], [-1, 1, -1, 1, -1, 1],
                                arm_length=arm_length,
                                sideward_angles=[-30, 30, -30, 30, -30, 30],
                                thrust_max=thrust_max, torque_to_thrust=torque_to_thrust,
                                mass=mass, inertia=np.diag([0.04, 0.04, 0.07]),
                                end_effector=end_effector)
