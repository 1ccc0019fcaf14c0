"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""
import time
from dataclasses import replace

import numpy as np
from scipy.spatial.transform import Rotation

from arcad.airframe import (AirframeModel, RotorSpec, build_allocation_matrix, flat_quadrotor,
                            hover_feasible, rotor_axis, rotor_position)
from arcad.analysis import (acceleration_set, omni_radius, response_metrics, wrench_set,
                            zonotope_volume)
from arcad.dynamics import Environment, RigidState, step
from arcad.scenario import load_airframe, load_scenario, log_to_csv, run_scenario


def timed(fn):
    t0 = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - t0


def test_01_allocation_golden(report):
    def body():
        af = load_airframe("hexarotor_tilted")
        B = build_allocation_matrix(af).matrix
        cols = np.column_stack([
            np.r_[rotor_axis(r), np.cross(rotor_position(r), rotor_axis(r))
                  + r.spin_direction * r.torque_to_thrust * rotor_axis(r)]
            for r in af.rotors])
        r1 = af.rotors[0]
        t = np.radians(r1.placement_angle)
        oracle = Rotation.from_rotvec(np.radians(r1.sideward_angle) * np.array(
            [np.cos(t), np.sin(t), 0.0])).apply([0, 0, -1])
        return B, cols, rotor_axis(r1), oracle
    (B, cols, axis1, oracle), secs = timed(body)
    rank = np.linalg.matrix_rank(B)
    col_err = np.abs(B - cols).max()
    ok = (B.shape == (6, 6) and rank == 6 and col_err <= 1e-12
          and np.abs(axis1 - [0.25, -0.4330, -0.8660]).max() <= 1e-4
          and np.abs(axis1 - oracle).max() <= 1e-12 and secs < 1.0)
    report("1 allocation golden", ok,
           f"rank={rank} col_err={col_err:.1e} axis1={np.round(axis1, 4)} {secs:.3f}s")
    assert ok


def test_02_hover(report):
    def body():
        quad = flat_quadrotor(mass=1.0)
        hov = hover_feasible(quad)
        spec = load_scenario("quad_hover")
        log = run_scenario(spec)
        p0 = spec.initial_state.position
        drift = np.sqrt((log["state.x"] - p0[0]) ** 2 + (log["state.y"] - p0[1]) ** 2
                        + (log["state.z"] - p0[2]) ** 2).max()
        return hov, spec, drift
    (hov, spec, drift), secs = timed(body)
    u_err = np.abs(hov.hover_thrusts - 9.81 / 4).max()
    ok = (hov.feasible and u_err <= 1e-9 and spec.duration == 5.0 and spec.dt == 0.001
          and spec.airframe.mass == 1.0 and drift < 0.01 and secs < 10.0)
    report("2 hover", ok, f"u_err={u_err:.1e} drift={drift:.2e} m {secs:.2f}s")
    assert ok


def test_03_attitude_step(report):
    def body():
        spec = load_scenario("hex_attitude_step")
        return spec, run_scenario(spec)
    (spec, log), secs = timed(body)
    target = spec.waypoints[-1].attitude
    details, ok = [], secs < 30.0
    for name, goal in zip(("roll", "pitch", "yaw"), target):
        t, y = log.t, log[f"state.{name}"]
        m = response_metrics(t, y, 0.0, goal, spec.settling_band)
        finite = all(v is not None and np.isfinite(v)
                     for v in (m.rise_time, m.settling_time, m.overshoot))
        axis_ok = finite and m.settling_time <= 10.0 and m.steady_state_error < 0.5
        ok &= axis_ok
        details.append(f"{name}: settle={m.settling_time:.3f}s sse={m.steady_state_error:.1e}")
    ok &= list(target) == [10.0, -5.0, -90.0]
    report("3 attitude step", ok, "; ".join(details) + f" {secs:.1f}s")
    assert ok


def test_04_wall_force(report):
    def body():
        spec = load_scenario("hex_wall_5N")
        return spec, run_scenario(spec)
    (spec, log), secs = timed(body)
    tail = log.t >= spec.duration - 2.0
    # contact normal is x in the tool frame, which points into the wall
    fn = log["ee.fx"][tail]
    dev = np.abs(fn - 5.0).max()
    ok = spec.duration == 20.0 and dev <= 0.10 and secs < 60.0
    report("4 wall force", ok, f"final 2 s in [{fn.min():.4f}, {fn.max():.4f}] N {secs:.1f}s")
    assert ok


def test_05_wrench_set_soundness(report):
    rng = np.random.default_rng(2024)

    def body():
        worst_slack, worst_vol = -np.inf, 0.0
        for _ in range(100):
            n = int(rng.integers(3, 9))
            rotors = [RotorSpec(placement_angle=float(rng.uniform(0, 360)),
                                arm_length=float(rng.uniform(0.1, 0.5)),
                                spin_direction=int(rng.choice([-1, 1])),
                                sideward_angle=float(rng.uniform(-45, 45)),
                                dihedral_angle=float(rng.uniform(-45, 45)),
                                thrust_max=float(rng.uniform(4, 12)))
                      for _ in range(n)]
            af = AirframeModel(1.0, np.diag([0.02, 0.02, 0.04]), rotors)
            B = build_allocation_matrix(af)
            lo, hi = af.thrust_limits
            P = wrench_set(B, af.thrust_limits)
            u = rng.uniform(lo, hi, size=(10_000, n))
            f = u @ B.force_rows.T
            worst_slack = max(worst_slack, float((f @ P.normals.T - P.offsets).max()))
            oracle = zonotope_volume(B.force_rows * (hi - lo))
            worst_vol = max(worst_vol, abs(P.volume() - oracle) / oracle)
        return worst_slack, worst_vol
    (slack, vol_err), secs = timed(body)
    ok = slack <= 1e-9 and vol_err <= 1e-6 and secs < 60.0
    report("5 wrench-set soundness", ok,
           f"max violation={slack:.1e} vol_rel_err={vol_err:.1e} {secs:.1f}s")
    assert ok


def test_06_degenerate_set(report):
    quad = flat_quadrotor()
    P = wrench_set(build_allocation_matrix(quad), quad.thrust_limits)
    length = float(np.linalg.norm(P.vertices[0] - P.vertices[-1]))
    r = omni_radius(acceleration_set(P, quad.mass))
    u_max = quad.rotors[0].thrust_max
    ok = P.affine_dimension == 1 and abs(length - 4 * u_max) <= 1e-9 and r == 0.0
    report("6 degenerate set", ok, f"dim={P.affine_dimension} length={length} omni={r}")
    assert ok


def _spin_error(dt, w=10.0, T=1.0):
    af = AirframeModel(1.0, np.diag([0.02, 0.02, 0.04]), [RotorSpec(placement_angle=0)])
    env = Environment(gravity=0.0)
    s = replace(RigidState.at_rest(1), omega=np.array([0.0, 0.0, w]))
    for _ in range(round(T / dt)):
        s = step(af, env, s, np.zeros(1), dt)
    exact = Rotation.from_rotvec([0, 0, w * T]).as_matrix()
    return np.linalg.norm(s.rotation - exact)


def test_07_integrator_order(report):
    ratio = _spin_error(0.01) / _spin_error(0.005)
    af = AirframeModel(1.0, np.diag([0.02, 0.02, 0.04]), [RotorSpec(placement_angle=0)])
    s = RigidState.at_rest(1)
    env = Environment()
    for _ in range(1000):
        s = step(af, env, s, np.zeros(1), 0.001)
    fall_err = abs(s.position[2] - 4.905)
    ok = 12 <= ratio <= 20 and fall_err <= 1e-6
    report("7 integrator order", ok, f"ratio={ratio:.2f} free_fall_err={fall_err:.1e} m")
    assert ok


def test_08_metrics_analytics(report):
    t = np.arange(0.0, 30.0 + 5e-4, 1e-3)
    first = response_metrics(t, 1 - np.exp(-t), 0.0, 1.0)
    zeta = 0.5
    wd = np.sqrt(1 - zeta**2)
    y2 = 1 - np.exp(-zeta * t) / wd * np.sin(wd * t + np.arccos(zeta))
    second = response_metrics(t, y2, 0.0, 1.0)
    ok = (abs(first.rise_time - np.log(9)) <= 1e-3
          and abs(first.settling_time - np.log(50)) <= 1e-3
          and abs(second.overshoot - 16.30) <= 0.05)
    report("8 metrics analytics", ok,
           f"rise={first.rise_time:.5f} settle={first.settling_time:.5f} "
           f"overshoot={second.overshoot:.3f}%")
    assert ok


def test_09_determinism(report):
    spec = load_scenario("hex_wall_5N")
    a = log_to_csv(run_scenario(spec)).encode()
    b = log_to_csv(run_scenario(load_scenario("hex_wall_5N"))).encode()
    ok = a == b
    report("9 determinism", ok, f"{len(a)} bytes")
    assert ok


def test_10_wrench_set_speed(report):
    rotors = [RotorSpec(placement_angle=45.0 * k, arm_length=0.3,
                        spin_direction=1 if k % 2 else -1,
                        sideward_angle=25.0 * (-1) ** k, dihedral_angle=10.0)
              for k in range(8)]
    af = AirframeModel(2.0, np.diag([0.03, 0.03, 0.05]), rotors)
    B = build_allocation_matrix(af)
    wrench_set(B, af.thrust_limits)
    times = []
    for _ in range(100):
        t0 = time.perf_counter()
        wrench_set(B, af.thrust_limits)
        times.append(time.perf_counter() - t0)
    median = float(np.median(times))
    ok = median < 1e-3
    report("10 wrench-set speed", ok, f"median={median * 1e3:.3f} ms (n=8)")
    assert ok
