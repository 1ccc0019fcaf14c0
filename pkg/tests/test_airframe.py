import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from arcad.airframe import (AirframeModel, DimensionError, RotorSpec, build_allocation_matrix,
                            flat_quadrotor, hover_feasible, hover_wrench, rotor_axis,
                            rotor_position, tilted_hexarotor, validate_airframe)


def rodrigues_oracle(theta, sideward, dihedral):
    # independent route: scipy rotation vectors, composed dihedral-then-sideward
    t = np.radians(theta)
    radial = np.array([np.cos(t), np.sin(t), 0.0])
    tangential = np.cross([0.0, 0.0, 1.0], radial)
    r = (Rotation.from_rotvec(np.radians(sideward) * radial)
         * Rotation.from_rotvec(np.radians(dihedral) * tangential))
    return r.apply([0.0, 0.0, -1.0])


class TestRotorAxis:
    def test_tilted_hexarotor_first_rotor(self):
        axis = rotor_axis(RotorSpec(placement_angle=30, sideward_angle=-30))
        np.testing.assert_allclose(axis, [0.25, -np.sqrt(3) / 4, -np.sqrt(3) / 2], atol=1e-12)
        np.testing.assert_allclose(axis, rodrigues_oracle(30, -30, 0), atol=1e-12)

    @pytest.mark.parametrize("theta", [0, 30, 77, 180, 300])
    def test_untilted_points_up(self, theta):
        np.testing.assert_allclose(rotor_axis(RotorSpec(placement_angle=theta)), [0, 0, -1],
                                   atol=1e-15)

    def test_dihedral_90(self):
        axis = rotor_axis(RotorSpec(placement_angle=0, dihedral_angle=90))
        np.testing.assert_allclose(axis, [-1, 0, 0], atol=1e-12)

    def test_inward_is_negative_dihedral(self):
        a = rotor_axis(RotorSpec(placement_angle=60, inward_angle=15))
        b = rotor_axis(RotorSpec(placement_angle=60, dihedral_angle=-15))
        np.testing.assert_array_equal(a, b)

    def test_servo_only_moves_tiltable_rotors(self):
        fixed = RotorSpec(placement_angle=45, sideward_angle=10)
        tilt = RotorSpec(placement_angle=45, sideward_angle=10, tiltable=True)
        np.testing.assert_array_equal(rotor_axis(fixed, 25.0), rotor_axis(fixed, 0.0))
        np.testing.assert_allclose(rotor_axis(tilt, 25.0), rodrigues_oracle(45, 35, 0), atol=1e-12)

    def test_unit_length_on_grid(self):
        grid = range(-90, 91, 10)
        worst = 0.0
        for theta in range(0, 360, 30):
            for side in grid:
                for dih in grid:
                    a = rotor_axis(RotorSpec(placement_angle=theta, sideward_angle=side,
                                             dihedral_angle=dih))
                    worst = max(worst, abs(np.linalg.norm(a) - 1.0))
        assert worst < 1e-12

    @given(theta=st.floats(0, 360), side=st.floats(-80, 80), dih=st.floats(-80, 80))
    def test_matches_oracle(self, theta, side, dih):
        a = rotor_axis(RotorSpec(placement_angle=theta, sideward_angle=side, dihedral_angle=dih))
        np.testing.assert_allclose(a, rodrigues_oracle(theta, side, dih), atol=1e-12)

    @given(theta=st.floats(0, 360), side=st.floats(-80, 80), dih=st.floats(-80, 80))
    def test_sideward_sign_mirrors_across_arm_plane(self, theta, side, dih):
        a = rotor_axis(RotorSpec(placement_angle=theta, sideward_angle=side, dihedral_angle=dih))
        b = rotor_axis(RotorSpec(placement_angle=theta, sideward_angle=-side, dihedral_angle=dih))
        t = np.radians(theta)
        tangential = np.array([-np.sin(t), np.cos(t), 0.0])
        mirrored = a - 2 * np.dot(a, tangential) * tangential
        np.testing.assert_allclose(b, mirrored, atol=1e-12)
        assert b[2] == pytest.approx(a[2], abs=1e-12)


class TestRotorPosition:
    def test_axis_aligned(self):
        p = rotor_position(RotorSpec(placement_angle=90, arm_length=0.4))
        np.testing.assert_allclose(p, [0, 0.4, 0], atol=1e-15)

    def test_offset_arm(self):
        p = rotor_position(RotorSpec(placement_angle=30, arm_length=0.5, arm_z_offset=-0.05))
        np.testing.assert_allclose(p, [0.5 * np.cos(np.pi / 6), 0.25, -0.05], atol=1e-15)

    def test_zero_length(self):
        p = rotor_position(RotorSpec(placement_angle=123, arm_length=0.0, arm_z_offset=0.1))
        np.testing.assert_array_equal(p, [0, 0, 0.1])


class TestAllocation:
    def test_flat_quad_first_column(self, quad):
        B = build_allocation_matrix(quad).matrix
        r = 0.25 / np.sqrt(2)
        np.testing.assert_allclose(B[:, 0], [0, 0, -1, -r, r, -0.016], atol=1e-12)
        assert abs(r - 0.17678) < 1e-5

    def test_untilted_force_rows(self, quad):
        B = build_allocation_matrix(quad).matrix
        np.testing.assert_allclose(B[:3], np.tile([[0], [0], [-1]], 4), atol=1e-15)

    def test_tilted_hexarotor_full_rank(self, hexa_B):
        s = np.linalg.svd(hexa_B.matrix, compute_uv=False)
        assert hexa_B.matrix.shape == (6, 6)
        assert s[-1] > 1e-3 * s[0]

    def test_servo_length_mismatch(self, hexa):
        with pytest.raises(DimensionError):
            build_allocation_matrix(hexa, [0.0] * 5)

    def test_force_entries_bounded(self, hexa_B):
        assert np.all(np.abs(hexa_B.force_rows) <= 1.0)

    @settings(max_examples=50)
    @given(st.data())
    def test_reconstruction(self, data):
        n = data.draw(st.integers(1, 8))
        rotors = []
        for _ in range(n):
            rotors.append(RotorSpec(
                placement_angle=data.draw(st.floats(0, 360)),
                arm_length=data.draw(st.floats(0, 1)),
                arm_z_offset=data.draw(st.floats(-0.2, 0.2)),
                spin_direction=data.draw(st.sampled_from([-1, 1])),
                sideward_angle=data.draw(st.floats(-60, 60)),
                dihedral_angle=data.draw(st.floats(-60, 60)),
                torque_to_thrust=data.draw(st.floats(0, 0.05))))
        model = AirframeModel(1.0, np.eye(3) * 0.02, rotors)
        B = build_allocation_matrix(model).matrix
        for i, r in enumerate(rotors):
            n_i = rotor_axis(r)
            expected = np.concatenate([n_i, np.cross(rotor_position(r), n_i)
                                       + r.spin_direction * r.torque_to_thrust * n_i])
            np.testing.assert_allclose(B[:, i], expected, atol=1e-12, rtol=0)


class TestHover:
    def test_flat_quad(self, quad):
        res = hover_feasible(quad)
        assert res.feasible
        np.testing.assert_allclose(res.hover_thrusts, 9.81 / 4, atol=1e-9)

    def test_flat_quad_too_heavy(self):
        assert not hover_feasible(flat_quadrotor(mass=4.0)).feasible

    def test_tilted_hexarotor(self, hexa, hexa_B):
        res = hover_feasible(hexa, hexa_B)
        assert res.feasible
        assert np.max(np.abs(hexa_B.matrix @ res.hover_thrusts - hover_wrench(2.0))) < 1e-9

    def test_simplex_path_when_min_norm_leaves_box(self):
        # quad with one weak rotor pair: min-norm solution is out of box, but
        # an 8-rotor coaxial layout still hovers by loading the strong rotors
        rotors = []
        for k, a in enumerate([45, 135, 225, 315]):
            d = 1 if k % 2 == 0 else -1
            rotors.append(RotorSpec(placement_angle=a, spin_direction=d, thrust_max=1.0))
            rotors.append(RotorSpec(placement_angle=a, spin_direction=-d, thrust_max=6.0))
        model = AirframeModel(2.0, np.diag([0.02, 0.02, 0.04]), rotors)
        B = build_allocation_matrix(model).matrix
        res = hover_feasible(model)
        assert res.feasible
        u = res.hover_thrusts
        lo, hi = model.thrust_limits
        assert np.all(u >= lo) and np.all(u <= hi)
        assert np.max(np.abs(B @ u - hover_wrench(2.0))) < 1e-9
        assert np.any(np.linalg.pinv(B) @ hover_wrench(2.0) > hi + 1e-6)

    @settings(max_examples=40)
    @given(mass=st.floats(0.2, 6.0), tmax=st.floats(2.0, 15.0))
    def test_returned_thrusts_satisfy_equality_and_box(self, mass, tmax):
        model = tilted_hexarotor(mass=mass, thrust_max=tmax)
        B = build_allocation_matrix(model).matrix
        res = hover_feasible(model)
        # hexarotor hover needs mg / (6 cos 30) per rotor; decide independently
        need = mass * 9.81 / (6 * np.cos(np.radians(30)))
        if abs(need - tmax) > 1e-6:
            assert res.feasible == (need < tmax)
        if res.feasible:
            u = res.hover_thrusts
            assert np.max(np.abs(B @ u - hover_wrench(mass))) < 1e-9
            assert np.all(u >= -1e-12) and np.all(u <= tmax + 1e-12)


class TestValidate:
    def test_valid_hexarotor(self, hexa):
        assert validate_airframe(hexa) == []

    def test_negative_mass(self, hexa):
        bad = AirframeModel(-1.0, hexa.inertia, hexa.rotors, hexa.end_effector)
        problems = validate_airframe(bad)
        assert len(problems) == 1 and "mass" in problems[0]

    def test_empty_thrust_interval(self, quad):
        rotors = list(quad.rotors)
        rotors[2] = RotorSpec(placement_angle=225, thrust_min=5.0, thrust_max=5.0)
        problems = validate_airframe(AirframeModel(quad.mass, quad.inertia, rotors))
        assert len(problems) == 1
        assert "rotor[2]" in problems[0] and "thrust_min < thrust_max" in problems[0]

    def test_asymmetric_inertia(self, quad):
        I = np.diag([0.02, 0.02, 0.04])
        I[0, 1] = 0.01
        problems = validate_airframe(AirframeModel(1.0, I, quad.rotors))
        assert any("symmetric" in p for p in problems)

    def test_hover_infeasible_is_reported(self):
        problems = validate_airframe(flat_quadrotor(mass=4.0))
        assert problems == ["hover is infeasible within the rotor thrust limits"]
