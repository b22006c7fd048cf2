"""Field generation, episode sampling, exact integration, collision."""

import json
import math

import numpy as np
import pytest

from fieldnav.config import FieldConfig
from fieldnav.kinematics import ModeTwist, SteeringMode
from fieldnav.world import (Pose2D, collision_check, episode_from_dict,
                            episode_to_dict, field_from_dict, field_to_dict,
                            generate_field, integrate, sample_episode,
                            wrap_angle)


class TestField:
    def test_deterministic(self):
        a = generate_field(42)
        b = generate_field(42)
        assert np.array_equal(a.plants, b.plants)
        for ra, rb in zip(a.rows, b.rows):
            assert ra.orientation_jitter == rb.orientation_jitter

    def test_plant_count(self):
        for seed in range(5):
            field = generate_field(seed)
            assert len(field.rows) == 5
            assert all(len(r.plant_centers) == 8 for r in field.rows)
            assert len(field.plants) == 40

    def test_zero_jitter_parallel_rows(self):
        field = generate_field(3, FieldConfig(jitter_max_deg=0.0))
        for row in field.rows:
            assert row.orientation_jitter == 0.0
            xs = row.plant_centers[:, 0]
            assert np.ptp(xs) == 0.0

    def test_jitter_within_bounds(self):
        cfg = FieldConfig()
        for seed in range(20):
            field = generate_field(seed, cfg)
            for row in field.rows:
                assert abs(row.orientation_jitter) <= cfg.jitter_max

    def test_grid_nodes_clear_of_plants(self):
        for seed in range(10):
            field = generate_field(seed)
            r = field.config.plant_radius
            for x in field.grid_x:
                for y in field.grid_y:
                    d = np.hypot(field.plants[:, 0] - x, field.plants[:, 1] - y)
                    assert d.min() > r + 0.2

    def test_overlapping_config_rejected(self):
        with pytest.raises(ValueError):
            generate_field(0, FieldConfig(row_spacing=0.3, jitter_max_deg=20.0))

    def test_serialization_roundtrip(self):
        field = generate_field(7)
        data = json.loads(json.dumps(field_to_dict(field)))
        back = field_from_dict(data)
        assert np.array_equal(back.plants, field.plants)
        assert back.bounds == field.bounds
        assert np.array_equal(back.grid_x, field.grid_x)


class TestEpisode:
    def test_deterministic(self):
        field = generate_field(1)
        a = sample_episode(field, 5)
        b = sample_episode(field, 5)
        assert a.start_pose == b.start_pose
        assert np.array_equal(a.goal, b.goal)

    def test_start_clearance(self):
        field = generate_field(2)
        radius = 0.16
        for seed in range(500):
            ep = sample_episode(field, seed, robot_radius=radius)
            d = np.hypot(field.plants[:, 0] - ep.start_pose.x,
                         field.plants[:, 1] - ep.start_pose.y)
            assert d.min() > radius + field.config.plant_radius

    def test_goal_inside_bounds_and_crop_section(self):
        field = generate_field(3)
        x0, y0, x1, y1 = field.bounds
        for seed in range(200):
            ep = sample_episode(field, seed)
            assert x0 <= ep.goal[0] <= x1 and y0 <= ep.goal[1] <= y1
            assert not field.is_headland_y(float(ep.goal[1]))

    def test_start_differs_from_goal_cell(self):
        field = generate_field(4)
        for seed in range(200):
            ep = sample_episode(field, seed)
            assert ep.start_node != ep.goal_node
            assert ep.start_node[0] != ep.goal_node[0]  # crosses corridors

    def test_serialization_roundtrip(self):
        field = generate_field(5)
        ep = sample_episode(field, 9)
        back = episode_from_dict(json.loads(json.dumps(episode_to_dict(ep))))
        assert back.start_pose == ep.start_pose
        assert np.array_equal(back.goal, ep.goal)


class TestIntegration:
    def test_straight_line(self):
        p = integrate(Pose2D(0, 0, 0), SteeringMode.SYMMETRIC_4WS,
                      ModeTwist(v_x=3.0), dt=1.0)
        assert (p.x, p.y, p.heading) == (3.0, 0.0, 0.0)

    def test_full_circle_closure(self):
        tw = ModeTwist(v_x=3.0, omega=1.0)
        pose = Pose2D(0.3, -0.2, 0.5)
        n = 200
        q = pose
        for _ in range(n):
            q = integrate(q, SteeringMode.SYMMETRIC_4WS, tw, 2.0 * math.pi / n)
        assert math.hypot(q.x - pose.x, q.y - pose.y) < 1e-6

    def test_half_step_composition(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            pose = Pose2D(*rng.uniform(-2, 2, 2), rng.uniform(-3, 3))
            tw = ModeTwist(v_x=rng.uniform(-3, 3), omega=rng.uniform(-3, 3))
            full = integrate(pose, SteeringMode.SYMMETRIC_4WS, tw, 0.2)
            half = integrate(integrate(pose, SteeringMode.SYMMETRIC_4WS, tw, 0.1),
                             SteeringMode.SYMMETRIC_4WS, tw, 0.1)
            assert math.hypot(full.x - half.x, full.y - half.y) < 1e-9
            assert abs(wrap_angle(full.heading - half.heading)) < 1e-9

    def test_tiny_yaw_rate_stable(self):
        # the arc form must not cancel catastrophically near omega = 0
        p = integrate(Pose2D(0, 0, math.pi / 2), SteeringMode.SYMMETRIC_4WS,
                      ModeTwist(v_x=3.0, omega=1e-16), dt=0.2)
        assert p.y == pytest.approx(0.6, abs=1e-12)

    def test_zero_turn_rotates_in_place(self):
        tw = ModeTwist(omega=3.0 * (math.pi / 6) / 3.0)
        p = integrate(Pose2D(1, 2, 0.3), SteeringMode.ZERO_TURN, tw, dt=1.0)
        assert p.x == 1.0 and p.y == 2.0
        assert p.heading == pytest.approx(0.3 + math.pi / 6, abs=1e-12)

    def test_lateral_preserves_heading(self):
        tw = ModeTwist(v_lat=0.3)
        p = integrate(Pose2D(0, 0, 0.7), SteeringMode.LATERAL, tw, dt=0.5)
        assert p.heading == 0.7
        assert p.x == pytest.approx(-0.15 * math.sin(0.7))
        assert p.y == pytest.approx(0.15 * math.cos(0.7))

    def test_heading_normalized(self):
        p = Pose2D(0, 0, 0)
        for _ in range(100):
            p = integrate(p, SteeringMode.ZERO_TURN, ModeTwist(omega=3.0), dt=0.5)
            assert -math.pi < p.heading <= math.pi

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            integrate(Pose2D(), SteeringMode.LATERAL, ModeTwist(), dt=0.0)


class TestCollision:
    def test_corridor_center_clear(self):
        field = generate_field(0, FieldConfig(jitter_max_deg=0.0))
        x = (field.grid_x[2] + 0.0)
        assert not collision_check(Pose2D(x, 0.0, 0.0), field, robot_radius=0.17)

    def test_on_plant_collides(self):
        field = generate_field(0)
        px, py = field.plants[10]
        assert collision_check(Pose2D(px, py, 0.0), field, robot_radius=0.17)

    def test_corridor_sweep_never_collides(self):
        # dense sweep along every corridor centerline of a jitter-free field
        field = generate_field(1, FieldConfig(jitter_max_deg=0.0))
        radius = 0.1414 + 0.02  # chassis half-diagonal + margin
        for x in field.grid_x:
            for y in np.linspace(field.bounds[1], field.bounds[3], 400):
                assert not collision_check(Pose2D(float(x), float(y), 0.0),
                                           field, radius)

    def test_sweep_with_default_jitter(self):
        for seed in range(5):
            field = generate_field(seed)
            radius = 0.1414 + 0.02
            for x in field.grid_x:
                for y in np.linspace(field.bounds[1], field.bounds[3], 200):
                    assert not collision_check(Pose2D(float(x), float(y), 0.0),
                                               field, radius)


def test_wrap_angle():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.0) == 0.0
    for a in np.linspace(-10, 10, 101):
        w = wrap_angle(float(a))
        assert -math.pi < w <= math.pi
        assert abs(math.remainder(w - a, 2 * math.pi)) < 1e-12
