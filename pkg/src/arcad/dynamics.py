"""Rigid-body multirotor dynamics with first-order actuators and penalty contact."""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .airframe import build_allocation_matrix
from .rotations import cross3, quat_mul, quat_to_rot

GRAVITY = 9.81


class DivergenceError(RuntimeError):
    def __init__(self, channel, t=None):
        self.channel = channel
        self.t = t
        where = "" if t is None else f" at t={t:.6f} s"
        super().__init__(f"simulation diverged{where}: {channel} is not finite")


class MissingEndEffectorError(ValueError):
    pass


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    moment: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frame: str = "body"  # body | inertial | end-effector

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float))
        object.__setattr__(self, "moment", np.asarray(self.moment, dtype=float))
        if self.frame not in ("body", "inertial", "end-effector", "contact"):
            raise ValueError(f"unknown wrench frame {self.frame!r}")

    @property
    def vector(self):
        return np.concatenate([self.force, self.moment])


@dataclass(frozen=True)
class ContactParams:
    stiffness: float = 1000.0
    damping: float = 20.0
    tangential_viscous: float = 0.0


@dataclass(frozen=True)
class Plane:
    """Half-space obstacle; `normal` points out of the solid, toward free space."""
    point: np.ndarray
    normal: np.ndarray
    contact: ContactParams = ContactParams()

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("plane normal must be unit length")
        object.__setattr__(self, "normal", n)

    def penetration(self, x):
        """Depth of `x` inside the solid (negative outside) and the outward normal."""
        return -float(np.dot(x - self.point, self.normal)), self.normal


@dataclass(frozen=True)
class AxisAlignedBox:
    min_corner: np.ndarray
    max_corner: np.ndarray
    contact: ContactParams = ContactParams()

    def __post_init__(self):
        lo = np.asarray(self.min_corner, dtype=float)
        hi = np.asarray(self.max_corner, dtype=float)
        if not np.all(lo < hi):
            raise ValueError("box min_corner must be < max_corner componentwise")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    def penetration(self, x):
        # distance to each face; the shallowest face decides the contact normal
        depths = np.concatenate([x - self.min_corner, self.max_corner - x])
        k = int(np.argmin(depths))
        normal = np.zeros(3)
        normal[k % 3] = -1.0 if k < 3 else 1.0
        return float(depths[k]), normal


@dataclass(frozen=True)
class Environment:
    gravity: float = GRAVITY
    obstacles: tuple = ()

    def __post_init__(self):
        if self.gravity < 0:
            raise ValueError("gravity must be >= 0")
        object.__setattr__(self, "obstacles", tuple(self.obstacles))


@dataclass(frozen=True)
class RigidState:
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray  # unit quaternion (w, x, y, z), body -> inertial
    omega: np.ndarray  # body rates, rad/s
    thrusts: np.ndarray
    servo_angles: np.ndarray  # deg, one per rotor (ignored for fixed rotors)

    @classmethod
    def at_rest(cls, n_rotors, position=(0.0, 0.0, 0.0), attitude=(1.0, 0.0, 0.0, 0.0),
                thrusts=None):
        return cls(position=np.array(position, dtype=float),
                   velocity=np.zeros(3),
                   attitude=np.array(attitude, dtype=float),
                   omega=np.zeros(3),
                   thrusts=np.zeros(n_rotors) if thrusts is None else np.array(thrusts, dtype=float),
                   servo_angles=np.zeros(n_rotors))

    @property
    def rotation(self):
        return quat_to_rot(self.attitude)


@dataclass(frozen=True)
class ContactResult:
    body_wrench: Wrench  # acting on the vehicle, about the center of mass
    measured: Wrench  # force on the environment, end-effector frame
    in_contact: bool


def body_wrench(B, thrusts):
    A = B.matrix if hasattr(B, "matrix") else np.asarray(B)
    thrusts = np.asarray(thrusts, dtype=float)
    if A.shape[1] != thrusts.shape[0]:
        raise ValueError(f"allocation has {A.shape[1]} columns but {thrusts.shape[0]} thrusts given")
    w = A @ thrusts
    return Wrench(w[:3], w[3:], "body")


def end_effector_pose(airframe, state, rotation=None):
    """Tip position and velocity of the end-effector in the inertial frame."""
    ee = airframe.end_effector
    if ee is None:
        raise MissingEndEffectorError("airframe has no end-effector")
    R = state.rotation if rotation is None else rotation
    offset = ee.tip_offset
    tip = state.position + R @ offset
    tip_vel = state.velocity + R @ cross3(state.omega, offset)
    return tip, tip_vel


_ZERO3 = np.zeros(3)


def _contact_force(tip, tip_vel, environment):
    """Total inertial force on the vehicle from all obstacles touching `tip`."""
    total = np.zeros(3)
    touching = False
    for obs in environment.obstacles:
        depth, normal = obs.penetration(tip)
        if depth <= 0.0:
            continue
        touching = True
        c = obs.contact
        vn = float(np.dot(tip_vel, normal))
        rate = -vn  # penetration rate, positive when moving deeper
        fn = max(0.0, c.stiffness * depth + c.damping * rate)
        tangential_vel = tip_vel - vn * normal
        total += fn * normal - c.tangential_viscous * tangential_vel
    return total, touching


def contact_wrench(airframe, state, environment, rotation=None):
    """Penalty contact at the end-effector tip.

    Returns the wrench on the vehicle (body frame, about the center of mass)
    and the reaction the tool exerts on the environment in the tool frame.
    """
    if airframe.end_effector is None or not environment.obstacles:
        zero = Wrench(_ZERO3, _ZERO3, "body")
        return ContactResult(zero, Wrench(_ZERO3, _ZERO3, "end-effector"), False)

    R = state.rotation if rotation is None else rotation
    tip, tip_vel = end_effector_pose(airframe, state, R)
    f_inertial, touching = _contact_force(tip, tip_vel, environment)
    f_body = R.T @ f_inertial
    m_body = cross3(airframe.end_effector.tip_offset, f_body)
    measured = airframe.end_effector.frame.T @ (-f_body)
    return ContactResult(Wrench(f_body, m_body, "body"),
                         Wrench(measured, np.zeros(3), "end-effector"), touching)


def measured_force_inertial(airframe, state, measured):
    """Express an end-effector-frame measured force in the inertial frame."""
    return state.rotation @ (airframe.end_effector.frame @ measured.force)


def state_derivative(airframe, state, actuator, external=None, gravity=GRAVITY, rotation=None):
    """Newton-Euler rates: (p_dot, v_dot, q_dot, omega_dot)."""
    R = quat_to_rot(state.attitude) if rotation is None else rotation
    f = actuator.force
    tau = actuator.moment
    if external is not None:
        f = f + external.force
        tau = tau + external.moment
    drag = airframe.linear_drag * (R.T @ state.velocity)
    v_dot = R @ (f - drag) / airframe.mass
    v_dot[2] += gravity
    q_dot = 0.5 * quat_mul(state.attitude, np.array([0.0, *state.omega]))
    I = airframe.inertia
    w = state.omega
    w_dot = airframe.inertia_inv @ (tau - cross3(w, I @ w))
    return state.velocity, v_dot, q_dot, w_dot


@dataclass(frozen=True)
class Commands:
    thrusts: np.ndarray
    servo_angles: Optional[np.ndarray] = None


def _check_finite(state, t):
    for name in ("position", "velocity", "attitude", "omega", "thrusts", "servo_angles"):
        arr = getattr(state, name)
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise DivergenceError(f"{name}[{bad[0]}]", t)


def step(airframe, environment, state, commands, dt, B=None, t=None):
    """Advance one fixed step: exact actuator lag plus one RK4 step of the body.

    `B` may be passed to skip rebuilding the allocation matrix when no rotor
    is tiltable.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    lo, hi = airframe.thrust_limits
    if not isinstance(commands, Commands):
        commands = Commands(np.asarray(commands, dtype=float))
    u_cmd = np.clip(commands.thrusts, lo, hi)

    if B is None:
        B = build_allocation_matrix(airframe, state.servo_angles)
    actuator = body_wrench(B, state.thrusts)
    g = environment.gravity

    def deriv(s):
        R = quat_to_rot(s.attitude)
        ext = None
        if environment.obstacles:
            ext = contact_wrench(airframe, s, environment, R).body_wrench
        return state_derivative(airframe, s, actuator, ext, g, R)

    def shifted(k, h):
        return replace(state,
                       position=state.position + h * k[0],
                       velocity=state.velocity + h * k[1],
                       attitude=state.attitude + h * k[2],
                       omega=state.omega + h * k[3])

    k1 = deriv(state)
    k2 = deriv(shifted(k1, dt / 2))
    k3 = deriv(shifted(k2, dt / 2))
    k4 = deriv(shifted(k3, dt))
    inc = [(a + 2 * b + 2 * c + d) * (dt / 6) for a, b, c, d in zip(k1, k2, k3, k4)]

    decay = np.exp(-dt / airframe.time_constants)
    thrusts = np.clip(u_cmd + (state.thrusts - u_cmd) * decay, lo, hi)
    servo = state.servo_angles
    if commands.servo_angles is not None and airframe.tiltable.any():
        target = np.where(airframe.tiltable, commands.servo_angles, 0.0)
        servo = target + (servo - target) * decay

    q = state.attitude + inc[2]
    q = q / np.linalg.norm(q)
    new = RigidState(position=state.position + inc[0],
                     velocity=state.velocity + inc[1],
                     attitude=q,
                     omega=state.omega + inc[3],
                     thrusts=thrusts,
                     servo_angles=servo)
    _check_finite(new, t)
    return new
