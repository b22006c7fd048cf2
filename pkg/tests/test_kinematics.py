"""Steering-parameterization tests: exact values, antisymmetry, the
slip-free steering condition, and mode rescaling."""

import math

import numpy as np
import pytest

from fieldnav.kinematics import (BodyTwist, DegenerateSteering,
                                 KinematicsError, ModeTwist, RobotGeometry,
                                 SteeringMode, body_twist_from_mode,
                                 check_kinematic_condition, lateral,
                                 max_wheel_speed, symmetric_4ws,
                                 wheel_command_for_mode, zero_turn)

SQUARE = RobotGeometry(wheelbase=1.0, track=1.0, wheel_radius=0.25)


class TestSymmetric4WS:
    def test_straight_line(self):
        cmd = symmetric_4ws(SQUARE, BodyTwist(v_x=3.0, omega=0.0))
        assert cmd.steer_angles == (0.0, 0.0, 0.0, 0.0)
        assert cmd.wheel_omegas == (12.0, 12.0, 12.0, 12.0)  # v_x / R

    def test_turning_case_direct_evaluation(self):
        # direct evaluation of the wheel-1 angle and speed formulas:
        # theta1 = atan(omega*l / (omega*t + 2*v_x)), speed = |v1| / R
        cmd = symmetric_4ws(SQUARE, BodyTwist(v_x=3.0, omega=1.0))
        assert cmd.steer_angles[0] == pytest.approx(math.atan(1.0 / 7.0), abs=1e-12)
        assert cmd.steer_angles[0] == pytest.approx(0.14189, abs=1e-5)
        expect_w1 = math.hypot(3.0 + 0.5, 0.5) / 0.25
        assert cmd.wheel_omegas[0] == pytest.approx(expect_w1, abs=1e-12)
        assert cmd.wheel_omegas[0] == pytest.approx(14.1421, abs=1e-4)

    def test_antisymmetry_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            geom = RobotGeometry(*rng.uniform(0.2, 2.0, 3))
            v = float(rng.uniform(0.5, 5.0)) * (1 if rng.random() < 0.5 else -1)
            w = float(rng.uniform(-1.5, 1.5))
            try:
                cmd = symmetric_4ws(geom, BodyTwist(v, w))
            except KinematicsError:
                continue
            th = cmd.steer_angles
            assert th[0] == -th[3]
            assert th[1] == -th[2]

    def test_steering_condition_residual(self):
        geom = RobotGeometry(wheelbase=1.0, track=1.0, wheel_radius=0.25)
        cmd = symmetric_4ws(geom, BodyTwist(v_x=3.0, omega=1.0))
        assert check_kinematic_condition(cmd, geom) < 1e-9
        # track == wheelbase: both sides equal 2
        th1, th2 = cmd.steer_angles[0], cmd.steer_angles[1]
        assert 1.0 / math.tan(th2) - 1.0 / math.tan(th1) == pytest.approx(-2.0, abs=1e-9)

    def test_condition_random_sweep(self):
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(1000):
            geom = RobotGeometry(*rng.uniform(0.2, 2.0, 3))
            v = float(rng.uniform(1.0, 5.0))
            w = float(rng.uniform(0.05, 1.0)) * (1 if rng.random() < 0.5 else -1)
            try:
                cmd = symmetric_4ws(geom, BodyTwist(v, w))
            except KinematicsError:
                continue
            worst = max(worst, check_kinematic_condition(cmd, geom))
        assert worst < 1e-9

    def test_sign_covariance(self):
        # negating v_x negates every wheel speed while the turning geometry
        # maps to its mirror: wheel pairs (1,4) and (2,3) swap roles
        cmd_f = symmetric_4ws(SQUARE, BodyTwist(3.0, 0.7))
        cmd_r = symmetric_4ws(SQUARE, BodyTwist(-3.0, 0.7))
        wf, wr = cmd_f.wheel_omegas, cmd_r.wheel_omegas
        assert wr == pytest.approx((-wf[1], -wf[0], -wf[3], -wf[2]))
        assert all(w < 0 for w in wr)
        assert cmd_r.steer_angles[0] == pytest.approx(-cmd_f.steer_angles[1])
        assert cmd_r.steer_angles[1] == pytest.approx(-cmd_f.steer_angles[0])

    def test_omega_to_zero_limit(self):
        prev = None
        for w in (0.1, 0.01, 0.001, 1e-6):
            cmd = symmetric_4ws(SQUARE, BodyTwist(3.0, w))
            m = max(abs(t) for t in cmd.steer_angles)
            if prev is not None:
                assert m < prev
            prev = m
        assert prev < 1e-6
        cmd0 = symmetric_4ws(SQUARE, BodyTwist(-3.0, 0.0))
        assert cmd0.wheel_omegas == (-12.0, -12.0, -12.0, -12.0)

    def test_rejects_zero_turn_regime(self):
        with pytest.raises(KinematicsError):
            symmetric_4ws(SQUARE, BodyTwist(v_x=0.0, omega=1.0))

    def test_rejects_turning_center_inside_track(self):
        # 2*v_x < omega*t makes wheel 2 need |angle| > 90 deg
        with pytest.raises(KinematicsError):
            symmetric_4ws(SQUARE, BodyTwist(v_x=0.1, omega=10.0))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            BodyTwist(v_x=float("nan"), omega=0.0)


class TestZeroTurn:
    def test_square_geometry_45_degrees(self):
        cmd = zero_turn(SQUARE, omega=1.3)
        a = math.pi / 4
        assert cmd.steer_angles == (a, -a, a, -a)

    def test_zero_rate_keeps_stance(self):
        cmd = zero_turn(SQUARE, omega=0.0)
        assert cmd.wheel_omegas == (0.0, 0.0, 0.0, 0.0)
        assert cmd.steer_angles[0] == math.pi / 4

    def test_direct_evaluation(self):
        # omega * sqrt(l^2 + t^2) / (2R) with l=t=1, R=0.25, omega=2
        cmd = zero_turn(SQUARE, omega=2.0)
        expect = 2.0 * math.sqrt(2.0) / 0.5
        assert cmd.wheel_omegas[0] == pytest.approx(expect, abs=1e-12)
        assert cmd.wheel_omegas[0] == pytest.approx(5.6569, abs=1e-4)
        assert cmd.wheel_omegas == pytest.approx(
            (expect, -expect, -expect, expect))

    def test_rectangular_geometry(self):
        geom = RobotGeometry(wheelbase=2.0, track=1.0, wheel_radius=0.5)
        cmd = zero_turn(geom, omega=1.0)
        assert cmd.steer_angles[0] == pytest.approx(math.atan(2.0))
        assert cmd.steer_angles[1] == pytest.approx(-math.atan(2.0))

    def test_diagonal_pairs(self):
        cmd = zero_turn(SQUARE, omega=-0.8)
        w = cmd.wheel_omegas
        assert w[0] == w[3] and w[1] == w[2]
        assert w[0] == -w[1]


class TestLateral:
    def test_all_wheels_90_deg(self):
        cmd = lateral(3.0)
        q = math.pi / 2
        assert cmd.steer_angles == (q, q, q, q)
        assert cmd.wheel_omegas == (3.0, 3.0, 3.0, 3.0)

    def test_zero_rate_stationary(self):
        cmd = lateral(0.0)
        assert cmd.wheel_omegas == (0.0, 0.0, 0.0, 0.0)
        assert cmd.steer_angles[0] == math.pi / 2

    def test_negative_rate(self):
        cmd = lateral(-1.5)
        assert cmd.wheel_omegas == (-1.5, -1.5, -1.5, -1.5)

    def test_displacement_matches_rolling(self):
        # integrate one step and compare to the closed-form sideways travel
        from fieldnav.world import Pose2D, integrate

        geom = RobotGeometry()
        tw = body_twist_from_mode(SteeringMode.LATERAL, -0.5, geom=geom)
        pose = integrate(Pose2D(0, 0, 0), SteeringMode.LATERAL, tw, dt=2.0)
        expect = -0.5 * 3.0 * geom.wheel_radius * 2.0
        assert pose.y == pytest.approx(expect)
        assert pose.x == 0.0 and pose.heading == 0.0


class TestCondition:
    def test_degenerate_straight_line(self):
        cmd = symmetric_4ws(SQUARE, BodyTwist(3.0, 0.0))
        with pytest.raises(DegenerateSteering):
            check_kinematic_condition(cmd, SQUARE)


class TestModeRescale:
    def test_symmetric_mode(self):
        tw = body_twist_from_mode(SteeringMode.SYMMETRIC_4WS, 0.5, v_x_sign=1.0)
        assert tw == ModeTwist(v_x=3.0, omega=0.5)
        tw = body_twist_from_mode(SteeringMode.SYMMETRIC_4WS, 0.5, v_x_sign=-1.0)
        assert tw.v_x == -3.0

    def test_zero_turn_rescale(self):
        tw = body_twist_from_mode(SteeringMode.ZERO_TURN, 1.0)
        assert tw.omega == 3.0 and tw.v_x == 0.0

    def test_lateral_zero_action(self):
        tw = body_twist_from_mode(SteeringMode.LATERAL, 0.0)
        assert tw == ModeTwist()

    def test_lateral_scale_uses_wheel_radius(self):
        geom = RobotGeometry(wheelbase=0.5, track=0.5, wheel_radius=0.2)
        tw = body_twist_from_mode(SteeringMode.LATERAL, 1.0, geom=geom)
        assert tw.v_lat == pytest.approx(3.0 * 0.2)

    def test_out_of_range_action(self):
        with pytest.raises(KinematicsError):
            body_twist_from_mode(SteeringMode.SYMMETRIC_4WS, 1.5)

    def test_wheel_command_for_mode(self):
        cmd = wheel_command_for_mode(SQUARE, SteeringMode.LATERAL, 1.0)
        assert cmd.wheel_omegas == (3.0, 3.0, 3.0, 3.0)
        cmd = wheel_command_for_mode(SQUARE, SteeringMode.SYMMETRIC_4WS, 0.0, -1.0)
        assert cmd.wheel_omegas[0] < 0

    def test_max_wheel_speed_dominates(self):
        geom = RobotGeometry()
        bound = max_wheel_speed(geom)
        for mode, action, sign in [
            (SteeringMode.SYMMETRIC_4WS, 1.0, 1.0),
            (SteeringMode.SYMMETRIC_4WS, -1.0, -1.0),
            (SteeringMode.ZERO_TURN, 1.0, 1.0),
            (SteeringMode.LATERAL, -1.0, 1.0),
        ]:
            cmd = wheel_command_for_mode(geom, mode, action, sign)
            assert max(abs(w) for w in cmd.wheel_omegas) <= bound + 1e-12


def test_geometry_validation():
    with pytest.raises(ValueError):
        RobotGeometry(wheelbase=-1.0)
    with pytest.raises(ValueError):
        RobotGeometry(wheel_radius=0.0)
