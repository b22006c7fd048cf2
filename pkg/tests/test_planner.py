"""Grid waypoint planning: shortest routes, Manhattan bookkeeping, and the
nearest-unvisited query against a linear-scan oracle."""

import math
from collections import deque

import numpy as np
import pytest

from fieldnav.planner import (PlanningError, WaypointPath,
                              assigned_manhattan, manhattan,
                              nearest_unvisited, plan)
from fieldnav.planner import _neighbors
from fieldnav.world import Pose2D, generate_field


def bfs_shortest_hops(field, start_node, goal_node, blocked=frozenset()):
    """Independent breadth-first search over the same grid rules."""
    seen = {start_node: 0}
    queue = deque([start_node])
    while queue:
        node = queue.popleft()
        if node == goal_node:
            return seen[node]
        for nb in _neighbors(field, *node):
            if nb not in seen and nb not in blocked:
                seen[nb] = seen[node] + 1
                queue.append(nb)
    return None


class TestManhattan:
    def test_example(self):
        assert manhattan((0, 0), (2, 3)) == 5

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, b = rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)
            assert manhattan(a, b) == manhattan(b, a)

    def test_dominates_euclidean(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a, b = rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)
            assert manhattan(a, b) >= math.hypot(*(a - b)) - 1e-12

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            manhattan((float("inf"), 0), (0, 0))


class TestPlan:
    def test_same_corridor_straight(self):
        field = generate_field(0)
        start = Pose2D(float(field.grid_x[1]), float(field.grid_y[1]), math.pi / 2)
        goal = field.node_position(1, 4)
        path = plan(field, start, goal)
        assert path.n_wp == 3
        assert np.all(path.waypoints[:, 0] == field.grid_x[1])

    def test_two_corridors_detours_through_headland(self):
        # the matching route exits to the headland, moves across, re-enters
        field = generate_field(0)
        start = Pose2D(float(field.grid_x[1]), float(field.grid_y[2]), 0.0)
        goal = field.node_position(3, 2)
        path = plan(field, start, goal)
        ys = path.waypoints[:, 1]
        assert any(field.is_headland_y(float(y)) for y in ys)
        # hop count matches the independent BFS oracle
        hops = bfs_shortest_hops(field, (1, 2), (3, 2))
        assert path.n_wp == hops

    def test_matches_bfs_on_random_pairs(self):
        field = generate_field(3)
        rng = np.random.default_rng(5)
        nx, ny = len(field.grid_x), len(field.grid_y)
        for _ in range(60):
            s = (int(rng.integers(nx)), int(rng.integers(ny)))
            g = (int(rng.integers(nx)), int(rng.integers(ny)))
            if s == g:
                continue
            start = Pose2D(*field.node_position(*s), 0.0)
            path = plan(field, start, field.node_position(*g))
            assert path.n_wp == bfs_shortest_hops(field, s, g)

    def test_no_path_error(self):
        field = generate_field(0)
        goal_node = (2, 3)
        ring = {(2, 2), (2, 4), (1, 3), (3, 3)}
        start = Pose2D(*field.node_position(0, 0), 0.0)
        with pytest.raises(PlanningError):
            plan(field, start, field.node_position(*goal_node),
                 blocked=frozenset(ring))

    def test_out_of_bounds_rejected(self):
        field = generate_field(0)
        with pytest.raises(PlanningError):
            plan(field, Pose2D(99.0, 0.0, 0.0), field.node_position(0, 0))

    def test_consecutive_waypoints_one_axis(self):
        field = generate_field(1)
        start = Pose2D(*field.node_position(0, 1), 0.0)
        path = plan(field, start, field.node_position(4, 5))
        for a, b in zip(path.waypoints, path.waypoints[1:]):
            dx, dy = abs(b[0] - a[0]), abs(b[1] - a[1])
            assert (dx == 0) != (dy == 0)  # exactly one axis moves
            assert dx <= field.config.row_spacing + 1e-9
            assert dy <= field.config.grid_pitch + 1e-9

    def test_no_waypoint_in_plant_footprint(self):
        for seed in range(10):
            field = generate_field(seed)
            rng = np.random.default_rng(seed)
            nx, ny = len(field.grid_x), len(field.grid_y)
            s = (int(rng.integers(nx)), int(rng.integers(ny)))
            g = (int(rng.integers(nx)), int(rng.integers(ny)))
            if s == g:
                continue
            path = plan(field, Pose2D(*field.node_position(*s), 0.0),
                        field.node_position(*g))
            for wp in path.waypoints:
                d = np.hypot(field.plants[:, 0] - wp[0], field.plants[:, 1] - wp[1])
                assert d.min() > field.config.plant_radius

    def test_goal_is_final_waypoint(self):
        field = generate_field(2)
        goal = field.node_position(3, 4)
        path = plan(field, Pose2D(*field.node_position(0, 0), 0.0), goal)
        assert np.array_equal(path.waypoints[-1], goal)

    def test_assigned_manhattan_covers_route(self):
        field = generate_field(2)
        start = Pose2D(*field.node_position(0, 1), 0.0)
        path = plan(field, start, field.node_position(2, 3))
        total = assigned_manhattan(path, start)
        assert total >= manhattan(start.xy, path.waypoints[-1]) - 1e-9


class TestNearestUnvisited:
    def _path(self):
        wps = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
        return WaypointPath(waypoints=wps, nodes=[(0, 0)] * 4)

    def test_on_waypoint(self):
        path = self._path()
        i, wp, d = nearest_unvisited(path, Pose2D(0.0, 1.0, 0.0))
        assert i == 1 and d == 0.0

    def test_tie_prefers_earlier(self):
        path = self._path()
        # equidistant between waypoints 0 and 1
        i, _, d = nearest_unvisited(path, Pose2D(0.0, 0.5, 0.0))
        assert i == 0 and d == pytest.approx(0.5)

    def test_skips_visited(self):
        path = self._path()
        path.mark_visited(0)
        i, _, _ = nearest_unvisited(path, Pose2D(0.0, 0.0, 0.0))
        assert i == 1

    def test_all_visited_raises(self):
        path = self._path()
        for i in range(path.n_wp):
            path.mark_visited(i)
        with pytest.raises(LookupError):
            nearest_unvisited(path, Pose2D(0, 0, 0))

    def test_matches_linear_scan_oracle(self):
        rng = np.random.default_rng(2)
        path = self._path()
        path.mark_visited(2)
        for _ in range(200):
            pose = Pose2D(*rng.uniform(-3, 3, 2), 0.0)
            i, _, d = nearest_unvisited(path, pose)
            # oracle: plain scan
            best, bd = None, math.inf
            for j in range(path.n_wp):
                if path.visited[j]:
                    continue
                dj = abs(path.waypoints[j, 0] - pose.x) + abs(path.waypoints[j, 1] - pose.y)
                if dj < bd:
                    best, bd = j, dj
            assert i == best and d == pytest.approx(bd)
