"""Cascaded multirotor controllers.

Position loop -> attitude strategy -> attitude loop -> allocation, with a
hybrid force-position variant for contact tasks and a waypoint sequencer.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .rotations import cross3, euler_to_rot, vee

GRAVITY = 9.81


class DegenerateDirectionError(ValueError):
    pass


def _vec3(v):
    return np.broadcast_to(np.asarray(v, dtype=float), (3,)).copy()


@dataclass(frozen=True)
class PidGains:
    kp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ki: np.ndarray = field(default_factory=lambda: np.zeros(3))
    kd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    integrator_limit: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "integrator_limit"):
            v = _vec3(getattr(self, name))
            if np.any(v < 0):
                raise ValueError(f"{name} must be >= 0")
            object.__setattr__(self, name, v)

    def integral_term(self, integral):
        return np.clip(self.ki * integral, -self.integrator_limit, self.integrator_limit)

    def accumulate(self, integral, error, dt):
        """Integrate `error`, keeping the integral term within the clamp."""
        integral = integral + error * dt
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = np.where(self.ki > 0, self.integrator_limit / self.ki, np.inf)
        return np.clip(integral, -bound, bound)


class AttitudeStrategy(Enum):
    ZERO_TILT = "ZeroTilt"
    THRUST_ALIGNED = "ThrustAligned"
    FULL_POSE = "FullPose"


@dataclass(frozen=True)
class ForceSelection:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))  # inertial -> contact
    mask: tuple = (False, False, False)

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if np.max(np.abs(R @ R.T - np.eye(3))) > 1e-9:
            raise ValueError("contact frame rotation must be orthonormal")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "mask", tuple(bool(m) for m in self.mask))

    @property
    def active(self):
        return any(self.mask)


@dataclass(frozen=True)
class TrajectoryWaypoint:
    position: np.ndarray
    yaw: float = 0.0  # deg
    attitude: Optional[np.ndarray] = None  # (roll, pitch, yaw) deg; overrides yaw
    servo_angles: Optional[np.ndarray] = None
    wrench: Optional[np.ndarray] = None  # (fx, fy, fz, mx, my, mz), contact frame
    tolerance: float = 0.1
    hold_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if not self.tolerance > 0:
            raise ValueError("waypoint tolerance must be > 0")
        if self.hold_time < 0:
            raise ValueError("waypoint hold_time must be >= 0")

    @property
    def rotation(self):
        if self.attitude is not None:
            r, p, y = np.radians(self.attitude)
            return euler_to_rot(r, p, y)
        return euler_to_rot(0.0, 0.0, np.radians(self.yaw))


@dataclass(frozen=True)
class ControllerState:
    position_integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude_integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    force_integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    waypoint_index: int = 0
    hold_start: Optional[float] = None
    finished: bool = False


def position_control(gains, p_des, v_des, state, mass, integral=None, gravity=GRAVITY):
    """Desired inertial force (N), gravity compensation included."""
    e_p = np.asarray(p_des, dtype=float) - state.position
    e_v = np.asarray(v_des, dtype=float) - state.velocity
    acc = gains.kp * e_p + gains.kd * e_v
    if integral is not None:
        acc = acc + gains.integral_term(integral)
    f = mass * acc
    f[2] -= mass * gravity
    return f


def attitude_strategy(strategy, f_des, yaw_des=0.0, pose_des=None):
    """Map a desired inertial force to (R_des, body-frame force).

    `yaw_des` is in degrees; `pose_des` is a rotation matrix.
    """
    strategy = AttitudeStrategy(strategy)
    f_des = np.asarray(f_des, dtype=float)
    psi = np.radians(yaw_des)

    if strategy is AttitudeStrategy.FULL_POSE:
        if pose_des is None:
            raise ValueError("FullPose strategy needs a desired attitude")
        R = np.asarray(pose_des, dtype=float)
        return R, R.T @ f_des

    if strategy is AttitudeStrategy.ZERO_TILT:
        R = euler_to_rot(0.0, 0.0, psi)
        return R, R.T @ f_des

    mag = np.linalg.norm(f_des)
    if mag < 1e-9:
        raise DegenerateDirectionError("thrust-aligned attitude undefined for zero force")
    # thrust acts along -z_body, so z_body points against the demanded force
    b3 = -f_des / mag
    heading = np.array([np.cos(psi), np.sin(psi), 0.0])
    b2 = np.cross(b3, heading)
    if np.linalg.norm(b2) < 1e-9:
        # force parallel to the heading: keep the heading's horizontal normal instead
        b2 = np.array([-np.sin(psi), np.cos(psi), 0.0])
        b2 = b2 - np.dot(b2, b3) * b3
    b2 /= np.linalg.norm(b2)
    b1 = np.cross(b2, b3)
    R = np.column_stack([b1, b2, b3])
    return R, np.array([0.0, 0.0, -mag])


def attitude_error(R_des, R):
    return 0.5 * vee(R_des.T @ R - R.T @ R_des)


def attitude_control(gains, R_des, state, inertia, integral=None, rotation=None):
    R = state.rotation if rotation is None else rotation
    e_R = attitude_error(R_des, R)
    w = state.omega
    tau = -gains.kp * e_R - gains.kd * w + cross3(w, inertia @ w)
    if integral is not None:
        tau = tau - gains.integral_term(integral)
    return tau


@dataclass(frozen=True)
class AllocationResult:
    thrusts: np.ndarray
    saturated: bool


def allocation_pinv(B):
    A = B.matrix if hasattr(B, "matrix") else np.asarray(B)
    return np.linalg.pinv(A, rcond=1e-9)


def allocate(B, wrench, limits, pinv=None):
    """Pseudo-inverse allocation followed by a per-rotor clamp."""
    if pinv is None:
        pinv = allocation_pinv(B)
    lo, hi = limits
    u = pinv @ np.asarray(wrench, dtype=float)
    clamped = np.clip(u, lo, hi)
    return AllocationResult(clamped, bool(np.any(clamped != u)))


def force_loop(force_gains, f_des, f_meas, integral):
    """PI force law with feedforward; all vectors in the contact frame."""
    e_f = np.asarray(f_des, dtype=float) - np.asarray(f_meas, dtype=float)
    return np.asarray(f_des, dtype=float) + force_gains.kp * e_f + force_gains.integral_term(integral)


def hybrid_force_command(selection, force_gains, f_des_contact, f_meas_contact,
                         f_position, force_integral):
    """Merge position-loop and force-loop outputs into one inertial force.

    Force-selected contact axes use the PI force law; the other axes keep the
    position loop's command. An empty selection returns `f_position` untouched.
    """
    if not selection.active:
        return f_position
    Rc = selection.rotation
    mask = np.array(selection.mask)
    f_force = force_loop(force_gains, f_des_contact, f_meas_contact, force_integral)
    merged = np.where(mask, f_force, Rc @ f_position)
    return Rc.T @ merged


def hybrid_force_position(selection, force_gains, desired_force, measured_force,
                          p_des, position_gains, state, mass, *, strategy, attitude_gains,
                          inertia, yaw_des=0.0, pose_des=None, v_des=(0.0, 0.0, 0.0),
                          position_integral=None, force_integral=None,
                          attitude_integral=None, gravity=GRAVITY):
    """Desired body wrench (6-vector) for contact tasks.

    `desired_force` and `measured_force` are contact-frame forces the tool
    applies to the environment.
    """
    f_pos = position_control(position_gains, p_des, v_des, state, mass,
                             position_integral, gravity)
    f = hybrid_force_command(selection, force_gains, desired_force, measured_force, f_pos,
                             np.zeros(3) if force_integral is None else force_integral)
    R_des, f_body = attitude_strategy(strategy, f, yaw_des, pose_des)
    tau = attitude_control(attitude_gains, R_des, state, inertia, attitude_integral)
    return np.concatenate([f_body, tau])


@dataclass(frozen=True)
class Setpoint:
    position: np.ndarray
    rotation: np.ndarray
    yaw: float
    attitude: Optional[np.ndarray]
    servo_angles: Optional[np.ndarray]
    wrench: Optional[np.ndarray]


def trajectory_step(waypoints, ctrl, state, measured=None, t=0.0):
    """Return (setpoint, finished, new controller state).

    A waypoint is complete once the vehicle has stayed within its tolerance
    for `hold_time`; at most one waypoint is completed per call.
    `measured` is accepted for interface symmetry and currently unused.
    """
    if not waypoints:
        raise ValueError("trajectory needs at least one waypoint")
    idx = ctrl.waypoint_index
    wp = waypoints[idx]
    if not ctrl.finished:
        inside = np.linalg.norm(state.position - wp.position) <= wp.tolerance
        if not inside:
            ctrl = replace(ctrl, hold_start=None)
        else:
            start = t if ctrl.hold_start is None else ctrl.hold_start
            if t - start >= wp.hold_time:
                if idx + 1 < len(waypoints):
                    ctrl = replace(ctrl, waypoint_index=idx + 1, hold_start=None)
                else:
                    ctrl = replace(ctrl, hold_start=start, finished=True)
            else:
                ctrl = replace(ctrl, hold_start=start)

    wp = waypoints[ctrl.waypoint_index]
    sp = Setpoint(position=wp.position, rotation=wp.rotation, yaw=wp.yaw,
                  attitude=wp.attitude, servo_angles=wp.servo_angles, wrench=wp.wrench)
    return sp, ctrl.finished, ctrl


@dataclass(frozen=True)
class ControllerConfig:
    strategy: AttitudeStrategy = AttitudeStrategy.FULL_POSE
    position: PidGains = PidGains()
    attitude: PidGains = PidGains()
    force: PidGains = PidGains()
    selection: ForceSelection = ForceSelection()

    def __post_init__(self):
        object.__setattr__(self, "strategy", AttitudeStrategy(self.strategy))


@dataclass(frozen=True)
class ControlOutput:
    thrust_commands: np.ndarray
    servo_commands: Optional[np.ndarray]
    saturated: bool
    setpoint: Setpoint
    desired_wrench: np.ndarray  # body frame
    desired_rotation: np.ndarray
    force_active: bool
    finished: bool


def control_update(config, airframe, B, waypoints, ctrl, state, measured_force_contact, t, dt,
                   gravity=GRAVITY, pinv=None):
    """One pass of the full controller stack.

    `measured_force_contact` is the force the tool applies to the environment,
    already rotated into the contact frame of `config.selection`.
    Returns (ControlOutput, new ControllerState).
    """
    sp, finished, ctrl = trajectory_step(waypoints, ctrl, state, None, t)
    R = state.rotation
    mass = airframe.mass

    f_pos = position_control(config.position, sp.position, np.zeros(3), state, mass,
                             ctrl.position_integral, gravity)
    e_p = sp.position - state.position

    sel = config.selection
    force_active = sp.wrench is not None and sel.active
    if force_active:
        mask = np.array(sel.mask)
        f_des_c = np.asarray(sp.wrench[:3], dtype=float)
        f = hybrid_force_command(sel, config.force, f_des_c, measured_force_contact, f_pos,
                                 ctrl.force_integral)
        e_f = np.where(mask, f_des_c - measured_force_contact, 0.0)
        force_integral = config.force.accumulate(ctrl.force_integral, e_f, dt)
        # no position integration along force-controlled axes
        e_p = sel.rotation.T @ np.where(mask, 0.0, sel.rotation @ e_p)
        pos_int = sel.rotation.T @ np.where(mask, 0.0, sel.rotation @ ctrl.position_integral)
    else:
        f = f_pos
        force_integral = np.zeros(3)
        pos_int = ctrl.position_integral

    yaw = sp.attitude[2] if sp.attitude is not None else sp.yaw
    try:
        R_des, f_body = attitude_strategy(config.strategy, f, yaw, sp.rotation)
    except DegenerateDirectionError:
        R_des, f_body = R, R.T @ f

    tau = attitude_control(config.attitude, R_des, state, airframe.inertia,
                           ctrl.attitude_integral, rotation=R)
    wrench = np.concatenate([f_body, tau])
    alloc = allocate(B, wrench, airframe.thrust_limits, pinv)

    ctrl = replace(ctrl,
                   position_integral=config.position.accumulate(pos_int, e_p, dt),
                   attitude_integral=config.attitude.accumulate(
                       ctrl.attitude_integral, attitude_error(R_des, R), dt),
                   force_integral=force_integral)
    out = ControlOutput(thrust_commands=alloc.thrusts, servo_commands=sp.servo_angles,
                        saturated=alloc.saturated, setpoint=sp, desired_wrench=wrench,
                        desired_rotation=R_des, force_active=force_active, finished=finished)
    return out, ctrl
