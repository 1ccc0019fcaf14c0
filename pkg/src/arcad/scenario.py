"""Airframe/scenario files, the simulation loop, signal logs and their exports."""
import difflib
import io
import os
import re
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import analysis
from .airframe import (AirframeModel, EndEffectorSpec, RotorSpec, build_allocation_matrix,
                       hover_feasible, validate_airframe)
from .control import (AttitudeStrategy, ControllerConfig, ControllerState, ForceSelection,
                      PidGains, TrajectoryWaypoint, allocation_pinv, control_update)
from .dynamics import (AxisAlignedBox, Commands, ContactParams, Environment, Plane, RigidState,
                       contact_wrench, end_effector_pose, step)
from .rotations import quat_from_euler, rot_to_euler

DEFAULT_DT = 0.001
DEFAULT_GRAVITY = 9.81


class ParseError(ValueError):
    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class UnknownChannelError(KeyError):
    def __init__(self, name, suggestions):
        self.name = name
        self.suggestions = suggestions
        hint = f"; did you mean {', '.join(suggestions)}?" if suggestions else ""
        super().__init__(f"unknown channel '{name}'{hint}")

    def __str__(self):
        return self.args[0]


# ---------------------------------------------------------------- file helpers

def _locate(text, key, table=None, index=0):
    """Best-effort line number of `key` inside the `index`-th `[table]`/`[[table]]`."""
    if text is None:
        return None
    current, seen = None, {}
    header = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_.\-]+)\s*\]\]?")
    keyline = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for lineno, line in enumerate(text.splitlines(), 1):
        m = header.match(line)
        if m:
            current = m.group(1)
            seen[current] = seen.get(current, -1) + 1
            if key is None and current == table and seen[current] == index:
                return lineno
            continue
        if key is not None and keyline.match(line):
            if current == table and (table is None or seen.get(table) == index):
                return lineno
    return None


class _Reader:
    """Typed access to one TOML table with location-aware errors."""

    def __init__(self, data, path, text, table=None, index=0):
        self.data = data
        self.path = path
        self.text = text
        self.table = table
        self.index = index
        self.used = set()

    def error(self, key, message):
        name = f"{self.path}.{key}" if self.path else key
        raise ParseError(message, key=name, line=_locate(self.text, key, self.table, self.index))

    def has(self, key):
        return key in self.data

    def missing(self, key):
        near = difflib.get_close_matches(key, [k for k in self.data if k not in self.used], n=1)
        hint = f" (unknown key '{near[0]}' looks like a misspelling)" if near else ""
        self.error(near[0] if near else key, f"{key} missing{hint}")

    def raw(self, key, default=None):
        self.used.add(key)
        return self.data.get(key, default)

    def number(self, key, default=None, required=False):
        if key not in self.data:
            if required:
                self.missing(key)
            return default
        v = self.raw(key)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.error(key, f"expected a number, got {v!r}")
        return float(v)

    def vector(self, key, length, default=None, required=False):
        if key not in self.data:
            if required:
                self.missing(key)
            return default
        v = self.raw(key)
        if not isinstance(v, list):
            self.error(key, f"expected a list of {length} numbers")
        if len(v) != length:
            self.error(key, f"expected {length} numbers, got {len(v)}")
        for x in v:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                self.error(key, f"non-numeric entry {x!r}")
        return np.array(v, dtype=float)

    def boolean(self, key, default=None):
        if key not in self.data:
            return default
        v = self.raw(key)
        if not isinstance(v, bool):
            self.error(key, f"expected true/false, got {v!r}")
        return v

    def string(self, key, default=None, required=False):
        if key not in self.data:
            if required:
                self.missing(key)
            return default
        v = self.raw(key)
        if not isinstance(v, str):
            self.error(key, f"expected a string, got {v!r}")
        return v

    def table_of(self, key):
        v = self.raw(key, {})
        if not isinstance(v, dict):
            self.error(key, "expected a table")
        return v

    def array_of_tables(self, key):
        v = self.raw(key, [])
        if not isinstance(v, list) or not all(isinstance(x, dict) for x in v):
            self.error(key, "expected [[" + key + "]] tables")
        return v

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            self.error(extra[0], f"unknown key '{extra[0]}'")


def _loads(text):
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"malformed file: {exc}", line=int(m.group(1)) if m else None) from None


# ---------------------------------------------------------------- airframes



def parse_airframe(text):
    """Parse and validate an airframe document.

    Top level: ``mass``, ``inertia`` (9 numbers, row-major), optional
    ``linear_drag`` (3 numbers); one ``[[rotor]]`` table per rotor and an
    optional ``[end_effector]`` table. Angles are in degrees.
    """
    top = _Reader(_loads(text), "", text)
    mass = top.number("mass", required=True)
    inertia = top.vector("inertia", 9, required=True).reshape(3, 3)
    drag = top.vector("linear_drag", 3, default=np.zeros(3))

    rotors = []
    for i, table in enumerate(top.array_of_tables("rotor")):
        r = _Reader(table, f"rotor[{i}]", text, "rotor", i)
        spin = r.number("spin_direction", required=True)
        if spin not in (1.0, -1.0):
            r.error("spin_direction", "must be +1 or -1")
        rotors.append(RotorSpec(
            placement_angle=r.number("placement_angle", required=True),
            arm_length=r.number("arm_length", required=True),
            arm_z_offset=r.number("arm_z_offset", 0.0),
            spin_direction=int(spin),
            sideward_angle=r.number("sideward_angle", 0.0),
            dihedral_angle=r.number("dihedral_angle", 0.0),
            inward_angle=r.number("inward_angle", 0.0),
            thrust_min=r.number("thrust_min", 0.0),
            thrust_max=r.number("thrust_max", required=True),
            torque_to_thrust=r.number("torque_to_thrust", required=True),
            motor_time_constant=r.number("motor_time_constant", 0.02),
            tiltable=r.boolean("tiltable", False),
        ))
        r.finish()
    if not rotors:
        top.error("rotor", "at least one [[rotor]] table is required")

    ee = None
    if top.has("end_effector"):
        e = _Reader(top.table_of("end_effector"), "end_effector", text, "end_effector")
        ee = EndEffectorSpec(mount_point=e.vector("mount_point", 3, default=np.zeros(3)),
                             direction=e.vector("direction", 3, required=True),
                             length=e.number("length", required=True))
        e.finish()
    top.finish()

    model = AirframeModel(mass=mass, inertia=inertia, rotors=rotors, end_effector=ee,
                          linear_drag=drag)
    problems = validate_airframe(model)
    if problems:
        key = problems[0].split(" ")[0].split(":")[0]
        raise ParseError("; ".join(problems), key=key)
    return model


def fixture_path(kind, name):
    """Path of a shipped fixture (`kind` is 'airframes' or 'scenarios')."""
    return Path(str(resources.files("arcad") / "data" / kind / f"{name}.toml"))


def _resolve(path_or_name, kind):
    """A file path, or the name of a shipped fixture."""
    p = Path(path_or_name)
    if p.exists():
        return p
    if p.parent == Path(".") and p.suffix == "":
        fixture = fixture_path(kind, p.name)
        if fixture.exists():
            return fixture
    raise FileNotFoundError(f"no such file or {kind[:-1]} fixture: {path_or_name}")


def load_airframe(path_or_name):
    return parse_airframe(_resolve(path_or_name, "airframes").read_text())


# ---------------------------------------------------------------- scenarios

@dataclass(frozen=True)
class ScenarioSpec:
    airframe: AirframeModel
    airframe_ref: str
    environment: Environment
    controller: ControllerConfig
    waypoints: tuple
    initial_state: RigidState
    dt: float
    duration: float
    channels: Optional[tuple]  # None = every available channel
    seed: int = 0
    settling_band: float = 0.02
    provenance: tuple = field(default=())


def default_gains(airframe):
    """Generic bandwidth-based gains used when a scenario gives none."""
    I = np.diag(airframe.inertia)
    position = PidGains(kp=[4.0, 4.0, 4.0], kd=[3.6, 3.6, 3.6], ki=[0.5, 0.5, 0.5],
                        integrator_limit=[2.0, 2.0, 2.0])
    attitude = PidGains(kp=64.0 * I, kd=14.4 * I, ki=8.0 * I, integrator_limit=2.0 * I * 10)
    force = PidGains(kp=[0.5, 0.5, 0.5], ki=[1.0, 1.0, 1.0], integrator_limit=[10.0, 10.0, 10.0])
    return position, attitude, force


def _gains(reader, key, fallback, provenance, prefix):
    if not reader.has(key):
        provenance.append(f"{prefix}.{key}: default gains")
        return fallback
    g = _Reader(reader.table_of(key), f"{prefix}.{key}", reader.text, f"{prefix}.{key}")
    try:
        gains = PidGains(kp=g.vector("kp", 3, default=np.zeros(3)),
                         ki=g.vector("ki", 3, default=np.zeros(3)),
                         kd=g.vector("kd", 3, default=np.zeros(3)),
                         integrator_limit=g.vector("integrator_limit", 3, default=np.zeros(3)))
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        g.error("kp", str(exc))
    g.finish()
    return gains


def _obstacle(table, i, text):
    r = _Reader(table, f"obstacle[{i}]", text, "obstacle", i)
    kind = r.string("kind", required=True)
    try:
        contact = ContactParams(stiffness=r.number("stiffness", 1000.0),
                                damping=r.number("damping", 20.0),
                                tangential_viscous=r.number("tangential_viscous", 0.0))
        if contact.stiffness <= 0 or contact.damping < 0 or contact.tangential_viscous < 0:
            r.error("stiffness", "contact parameters must be >= 0 with stiffness > 0")
        if kind == "plane":
            obs = Plane(point=r.vector("point", 3, required=True),
                        normal=r.vector("normal", 3, required=True), contact=contact)
        elif kind == "box":
            obs = AxisAlignedBox(min_corner=r.vector("min_corner", 3, required=True),
                                 max_corner=r.vector("max_corner", 3, required=True),
                                 contact=contact)
        else:
            r.error("kind", f"unknown obstacle kind {kind!r} (expected 'plane' or 'box')")
    except ParseError:
        raise
    except ValueError as exc:
        r.error("kind", str(exc))
    r.finish()
    return obs


def _waypoint(table, i, text, n_rotors):
    r = _Reader(table, f"waypoint[{i}]", text, "waypoint", i)
    pos = r.vector("position", 3, required=True)
    yaw = r.number("yaw", 0.0)
    att = r.vector("attitude", 3)
    servo = r.vector("servo_angles", n_rotors)
    force = r.vector("force", 3)
    moment = r.vector("moment", 3)
    wrench = None
    if force is not None or moment is not None:
        wrench = np.concatenate([np.zeros(3) if force is None else force,
                                 np.zeros(3) if moment is None else moment])
    tol = r.number("tolerance", 0.1)
    hold = r.number("hold", 0.0)
    if not tol > 0:
        r.error("tolerance", f"tolerance must be > 0 (got {tol})")
    if hold < 0:
        r.error("hold", f"hold must be >= 0 (got {hold})")
    r.finish()
    return TrajectoryWaypoint(position=pos, yaw=yaw, attitude=att, servo_angles=servo,
                              wrench=wrench, tolerance=tol, hold_time=hold)


def parse_scenario(text, base_dir=None):
    """Parse a scenario document; every applied default is listed in `provenance`."""
    prov = []
    top = _Reader(_loads(text), "", text)

    ref = top.string("airframe", required=True)
    ref_path = Path(ref)
    if base_dir is not None and not ref_path.is_absolute():
        ref_path = Path(base_dir) / ref_path
    if not ref_path.exists():
        try:
            ref_path = _resolve(ref, "airframes")
        except FileNotFoundError:
            top.error("airframe", f"airframe {ref!r} not found")
    airframe = parse_airframe(ref_path.read_text())

    duration = top.number("duration", required=True)
    if top.has("dt"):
        dt = top.number("dt")
    else:
        dt = DEFAULT_DT
        prov.append(f"dt = {DEFAULT_DT} (default)")
    if not dt > 0:
        top.error("dt", "dt must be > 0")
    if duration < 0:
        top.error("duration", "duration must be >= 0")
    if top.has("seed"):
        seed = int(top.number("seed"))
    else:
        seed = 0
        prov.append("seed = 0 (default)")
    if top.has("settling_band"):
        band = top.number("settling_band")
    else:
        band = 0.02
        prov.append("settling_band = 0.02 (default)")

    channels = None
    if top.has("log"):
        channels = top.raw("log")
        if not isinstance(channels, list) or not all(isinstance(c, str) for c in channels):
            top.error("log", "expected a list of channel names")
        channels = tuple(channels)
    else:
        prov.append("log = all channels (default)")

    env = _Reader(top.table_of("environment"), "environment", text, "environment")
    if env.has("gravity"):
        gravity = env.number("gravity")
        if gravity < 0:
            env.error("gravity", "gravity must be >= 0")
    else:
        gravity = DEFAULT_GRAVITY
        prov.append(f"environment.gravity = {DEFAULT_GRAVITY} (default)")
    env.finish()
    obstacle_tables = top.array_of_tables("obstacle")
    if not obstacle_tables:
        prov.append("obstacles = [] (default)")
    obstacles = [_obstacle(t, i, text) for i, t in enumerate(obstacle_tables)]
    environment = Environment(gravity=gravity, obstacles=obstacles)

    # initial state
    init = _Reader(top.table_of("initial"), "initial", text, "initial")
    values = {}
    for key, default in (("position", np.zeros(3)), ("velocity", np.zeros(3)),
                         ("attitude", np.zeros(3)), ("omega", np.zeros(3))):
        v = init.vector(key, 3)
        if v is None:
            prov.append(f"initial.{key} = [0, 0, 0] (default)")
            v = default
        values[key] = v
    thrusts = init.raw("thrusts")
    if thrusts is None:
        prov.append("initial.thrusts = hover (default)")
        thrusts = "hover"
    if thrusts == "hover":
        hov = hover_feasible(airframe, gravity=gravity)
        thrusts = hov.hover_thrusts if hov.feasible else airframe.thrust_limits[0]
    else:
        thrusts = init.vector("thrusts", airframe.n_rotors)
    init.finish()
    q = quat_from_euler(*np.radians(values["attitude"]))
    initial = RigidState(position=values["position"], velocity=values["velocity"],
                         attitude=q, omega=values["omega"], thrusts=np.asarray(thrusts, float),
                         servo_angles=np.zeros(airframe.n_rotors))

    # controller
    ctl = _Reader(top.table_of("controller"), "controller", text, "controller")
    dpos, datt, dforce = default_gains(airframe)
    if ctl.has("strategy"):
        name = ctl.string("strategy")
        try:
            strategy = AttitudeStrategy(name)
        except ValueError:
            ctl.error("strategy", f"unknown strategy {name!r} "
                      f"(expected one of {[s.value for s in AttitudeStrategy]})")
    else:
        strategy = AttitudeStrategy.FULL_POSE
        prov.append("controller.strategy = FullPose (default)")
    pos_g = _gains(ctl, "position", dpos, prov, "controller")
    att_g = _gains(ctl, "attitude", datt, prov, "controller")
    force_g = _gains(ctl, "force", dforce, prov, "controller")
    if ctl.has("selection"):
        s = _Reader(ctl.table_of("selection"), "controller.selection", text,
                    "controller.selection")
        rot = s.vector("rotation", 9, default=np.eye(3).ravel()).reshape(3, 3)
        axes = s.raw("axes", [False, False, False])
        if not isinstance(axes, list) or len(axes) != 3 or not all(isinstance(a, bool) for a in axes):
            s.error("axes", "expected 3 booleans")
        s.finish()
        try:
            selection = ForceSelection(rotation=rot, mask=tuple(axes))
        except ValueError as exc:
            s.error("rotation", str(exc))
    else:
        selection = ForceSelection()
        prov.append("controller.selection = none (default)")
    ctl.finish()
    controller = ControllerConfig(strategy=strategy, position=pos_g, attitude=att_g,
                                  force=force_g, selection=selection)

    wp_tables = top.array_of_tables("waypoint")
    waypoints = [_waypoint(t, i, text, airframe.n_rotors) for i, t in enumerate(wp_tables)]
    if not waypoints:
        prov.append("waypoint = hold initial pose (default)")
        r, p, y = values["attitude"]
        waypoints = [TrajectoryWaypoint(position=values["position"], yaw=y,
                                        attitude=values["attitude"] if (r or p) else None,
                                        tolerance=0.1)]
    top.finish()

    if duration < dt and duration != 0:
        top.error("duration", "duration must be >= dt")

    return ScenarioSpec(airframe=airframe, airframe_ref=ref, environment=environment,
                        controller=controller, waypoints=tuple(waypoints),
                        initial_state=initial, dt=dt, duration=duration, channels=channels,
                        seed=seed, settling_band=band, provenance=tuple(prov))


def load_scenario(path_or_name):
    p = _resolve(path_or_name, "scenarios")
    return parse_scenario(p.read_text(), base_dir=p.parent)


# ---------------------------------------------------------------- signal log

@dataclass
class SignalLog:
    dt: float
    channels: dict  # name -> 1-D float array, all the same length

    @property
    def t(self):
        n = len(next(iter(self.channels.values()))) if self.channels else 0
        return np.arange(n) * self.dt

    def __getitem__(self, name):
        if name == "t":
            return self.t
        if name not in self.channels:
            raise UnknownChannelError(name, suggest_channels(name, self.channels))
        return self.channels[name]

    def __len__(self):
        return len(self.t)

    @property
    def names(self):
        return list(self.channels)


def suggest_channels(name, available, n=3):
    return difflib.get_close_matches(name, list(available), n=n, cutoff=0.5)


_STATE = ["x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw", "p", "q", "r"]
_SETPOINT = ["x", "y", "z", "roll", "pitch", "yaw", "fx", "fy", "fz"]
_WRENCH = ["fx", "fy", "fz", "mx", "my", "mz"]


def available_channels(airframe, environment=None):
    names = [f"state.{c}" for c in _STATE]
    names += [f"setpoint.{c}" for c in _SETPOINT]
    if airframe.end_effector is not None:
        names += [f"ee.{c}" for c in ("x", "y", "z", "vx", "vy", "vz")]
        names += [f"ee.{c}" for c in _WRENCH] + ["ee.contact"]
    names += [f"wrench.{c}" for c in _WRENCH]
    names += [f"wrench.des_{c}" for c in _WRENCH]
    names += [f"wrench.contact_{c}" for c in _WRENCH]
    n = airframe.n_rotors
    names += [f"rotor.u{i + 1}" for i in range(n)]
    names += [f"rotor.cmd{i + 1}" for i in range(n)]
    if airframe.tiltable.any():
        names += [f"rotor.servo{i + 1}" for i in range(n)]
    names += ["ctrl.saturated", "ctrl.waypoint", "ctrl.finished", "ctrl.force_active"]
    return names


def _sample(airframe, state, contact, out, ctrl, B):
    roll, pitch, yaw = np.degrees(rot_to_euler(state.rotation))
    sp = out.setpoint
    sr, spp, sy = np.degrees(rot_to_euler(sp.rotation))
    fdes = np.zeros(3) if sp.wrench is None else sp.wrench[:3]
    row = {}
    row.update(zip((f"state.{c}" for c in _STATE),
                   [*state.position, *state.velocity, roll, pitch, yaw, *state.omega]))
    row.update(zip((f"setpoint.{c}" for c in _SETPOINT), [*sp.position, sr, spp, sy, *fdes]))
    if airframe.end_effector is not None:
        tip, tip_v = end_effector_pose(airframe, state)
        row.update(zip((f"ee.{c}" for c in ("x", "y", "z", "vx", "vy", "vz")), [*tip, *tip_v]))
        row.update(zip((f"ee.{c}" for c in _WRENCH), contact.measured.vector))
        row["ee.contact"] = float(contact.in_contact)
    row.update(zip((f"wrench.{c}" for c in _WRENCH), B.matrix @ state.thrusts))
    row.update(zip((f"wrench.des_{c}" for c in _WRENCH), out.desired_wrench))
    row.update(zip((f"wrench.contact_{c}" for c in _WRENCH), contact.body_wrench.vector))
    for i in range(airframe.n_rotors):
        row[f"rotor.u{i + 1}"] = state.thrusts[i]
        row[f"rotor.cmd{i + 1}"] = out.thrust_commands[i]
        if airframe.tiltable.any():
            row[f"rotor.servo{i + 1}"] = state.servo_angles[i]
    row["ctrl.saturated"] = float(out.saturated)
    row["ctrl.waypoint"] = float(ctrl.waypoint_index)
    row["ctrl.finished"] = float(out.finished)
    row["ctrl.force_active"] = float(out.force_active)
    return row


def run_scenario(spec):
    """Closed-loop simulation; one controller update and one physics step per dt."""
    airframe, env = spec.airframe, spec.environment
    names = available_channels(airframe, env)
    wanted = names if spec.channels is None else list(spec.channels)
    for c in wanted:
        if c not in names:
            raise UnknownChannelError(c, suggest_channels(c, names))

    n_steps = int(round(spec.duration / spec.dt))
    data = {c: np.empty(n_steps + 1) for c in wanted}
    B = build_allocation_matrix(airframe, spec.initial_state.servo_angles)
    pinv = allocation_pinv(B)

    state = spec.initial_state
    ctrl = ControllerState()
    # overflow on the way to a blow-up is reported as DivergenceError instead
    with np.errstate(over="ignore", invalid="ignore"):
        _run_loop(spec, airframe, env, wanted, data, state, ctrl, B, pinv, n_steps)
    return SignalLog(spec.dt, data)


def _run_loop(spec, airframe, env, wanted, data, state, ctrl, B, pinv, n_steps):
    tiltable = airframe.tiltable.any()
    sel = spec.controller.selection
    ee_frame = airframe.end_effector.frame if airframe.end_effector is not None else None
    for k in range(n_steps + 1):
        t = k * spec.dt
        if tiltable:
            B = build_allocation_matrix(airframe, state.servo_angles)
            pinv = allocation_pinv(B)
        contact = contact_wrench(airframe, state, env)
        if ee_frame is not None:
            f_meas = sel.rotation @ (state.rotation @ (ee_frame @ contact.measured.force))
        else:
            f_meas = np.zeros(3)
        out, new_ctrl = control_update(spec.controller, airframe, B, spec.waypoints, ctrl, state,
                                       f_meas, t, spec.dt, env.gravity, pinv)
        row = _sample(airframe, state, contact, out, ctrl, B)
        for c in wanted:
            data[c][k] = row[c]
        if k == n_steps:
            break
        state = step(airframe, env, state, Commands(out.thrust_commands, out.servo_commands),
                     spec.dt, B=None if tiltable else B, t=t)
        ctrl = new_ctrl


def run_batch(specs, max_workers=None):
    """Run independent scenarios in worker processes; results keep input order."""
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run_scenario, specs))


# ---------------------------------------------------------------- outputs

def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def log_to_csv(log):
    names = log.names
    t = log.t
    buf = io.StringIO()
    buf.write(",".join(["t", *names]) + "\n")
    cols = [log.channels[n] for n in names]
    for k in range(len(t)):
        buf.write(",".join([repr(float(t[k]))] + [repr(float(c[k])) for c in cols]) + "\n")
    return buf.getvalue()


def export_csv(log, path):
    atomic_write(path, log_to_csv(log))


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
    t = rows[:, 0]
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    return SignalLog(dt, {name: rows[:, i] for i, name in enumerate(header) if i > 0})


def export_polytope(poly, path):
    atomic_write(path, poly.to_off())


# setpoint channel drawn on top of each measured channel
_OVERLAY = {**{f"state.{c}": f"setpoint.{c}" for c in ("x", "y", "z", "roll", "pitch", "yaw")},
            **{f"ee.{c}": f"setpoint.{c}" for c in ("fx", "fy", "fz")}}


def detect_step(t, setpoint, y, tol=1e-9):
    """Find a single step in `setpoint`: (start index, initial value, target) or None."""
    jumps = np.flatnonzero(np.abs(np.diff(setpoint)) > tol)
    if len(jumps) == 0:
        if abs(y[0] - setpoint[0]) > tol:
            return 0, float(y[0]), float(setpoint[0])
        return None
    if len(jumps) == 1:
        k = jumps[0] + 1
        initial = float(y[k])
        target = float(setpoint[k])
        if abs(target - initial) > tol:
            return k, initial, target
    return None


def step_metrics(log, channel, band=0.02):
    """Response metrics of `channel` against its setpoint overlay, if a step exists."""
    sp_name = _OVERLAY.get(channel)
    if sp_name is None or sp_name not in log.channels:
        return None
    y = log[channel]
    found = detect_step(log.t, log[sp_name], y)
    if found is None:
        return None
    k, initial, target = found
    return analysis.response_metrics(log.t[k:], y[k:], initial, target, band)


def render_svg(log, channels, band=0.02, width=720, panel_height=180):
    for c in channels:
        if c not in log.channels:
            raise UnknownChannelError(c, suggest_channels(c, log.channels))
    t = log.t
    left, right, top_pad, gap = 70, 20, 30, 40
    height = top_pad + len(channels) * (panel_height + gap)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    t_lo, t_hi = (float(t[0]), float(t[-1])) if len(t) > 1 else (0.0, 1.0)
    t_span = (t_hi - t_lo) or 1.0
    pw = width - left - right

    for i, name in enumerate(channels):
        y0 = top_pad + i * (panel_height + gap)
        series = [(log[name], "#1f77b4", "")]
        sp_name = _OVERLAY.get(name)
        if sp_name in log.channels:
            series.append((log[sp_name], "#d62728", ' stroke-dasharray="5,3"'))
        vals = np.concatenate([s for s, _, _ in series])
        lo, hi = float(vals.min()), float(vals.max())
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        lo, hi = lo - pad, hi + pad

        out.append(f'<g class="panel" id="{name}">')
        out.append(f'<rect x="{left}" y="{y0}" width="{pw}" height="{panel_height}" '
                   f'fill="none" stroke="#888"/>')
        out.append(f'<text x="{left}" y="{y0 - 6}" font-weight="bold">{name}</text>')
        out.append(f'<text x="{left - 6}" y="{y0 + 10}" text-anchor="end">{hi:.4g}</text>')
        out.append(f'<text x="{left - 6}" y="{y0 + panel_height}" text-anchor="end">{lo:.4g}</text>')
        out.append(f'<text x="{left + pw}" y="{y0 + panel_height + 14}" text-anchor="end">'
                   f't = {t_hi:.3g} s</text>')
        stride = max(1, len(t) // 2000)
        for s, color, dash in series:
            xs = left + (t[::stride] - t_lo) / t_span * pw
            ys = y0 + panel_height - (s[::stride] - lo) / (hi - lo) * panel_height
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                       f'stroke-width="1.2"{dash}/>')
        m = step_metrics(log, name, band)
        if m is not None:
            text = "  ".join(f"{k}={'n/a' if v is None else format(v, '.4g')}"
                             for k, v in m.as_dict().items())
            out.append(f'<text class="metrics" x="{left + 6}" y="{y0 + 14}" fill="#333">'
                       f'{text}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_plots(log, channels, path, band=0.02):
    atomic_write(path, render_svg(log, channels, band))
