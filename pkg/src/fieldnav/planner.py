"""Waypoint planning on the corridor grid.

Grid nodes sit on corridor centerlines (plus one headland line beyond each
row end). Moves are 4-connected; cross-row moves are only allowed between
headland nodes, so any route between corridors detours through a headland.
Distances are Manhattan throughout to promote grid-based movement.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .world import FieldMap, Pose2D


class PlanningError(RuntimeError):
    """Goal not reachable on the corridor grid."""


def manhattan(a, b) -> float:
    """|ax - bx| + |ay - by|."""
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    if not all(map(math.isfinite, (ax, ay, bx, by))):
        raise ValueError("non-finite point")
    return abs(ax - bx) + abs(ay - by)


@dataclass
class WaypointPath:
    """Ordered waypoints from the start cell to the goal, with visit flags."""

    waypoints: np.ndarray                 # (n_wp, 2) positions
    nodes: list[tuple[int, int]]          # grid indices, same order
    visited: np.ndarray = dc_field(init=False)

    def __post_init__(self) -> None:
        if len(self.waypoints) < 1:
            raise ValueError("a path needs at least one waypoint")
        self.visited = np.zeros(len(self.waypoints), dtype=bool)

    @property
    def n_wp(self) -> int:
        return len(self.waypoints)

    @property
    def all_visited(self) -> bool:
        return bool(self.visited.all())

    def mark_visited(self, index: int) -> None:
        self.visited[index] = True


def _neighbors(field: FieldMap, ix: int, iy: int):
    nx, ny = len(field.grid_x), len(field.grid_y)
    out = []
    # row-axis moves first, then cross-row moves (headland only); within each
    # group the lower cell index (column-major) comes first
    for diy in (-1, 1):
        jy = iy + diy
        if 0 <= jy < ny:
            out.append((ix, jy))
    out.sort(key=lambda n: n[0] * ny + n[1])
    if field.is_headland_y(float(field.grid_y[iy])):
        cross = [(ix + dix, iy) for dix in (-1, 1) if 0 <= ix + dix < nx]
        cross.sort(key=lambda n: n[0] * ny + n[1])
        out.extend(cross)
    return out


def plan(
    field: FieldMap,
    start: Pose2D,
    goal: np.ndarray,
    blocked: frozenset[tuple[int, int]] = frozenset(),
) -> WaypointPath:
    """Shortest corridor-grid route from the start cell to the goal cell.

    Uniform-cost search with deterministic tie-breaking (row-axis moves
    preferred, then lower cell index). The start cell itself is not a
    waypoint; the goal cell is always the final one.

    Raises PlanningError when no route exists (e.g. goal cell blocked).
    """
    x0, y0, x1, y1 = field.bounds
    for p, name in ((start.xy, "start"), (np.asarray(goal, dtype=float), "goal")):
        if not (x0 <= p[0] <= x1 and y0 <= p[1] <= y1):
            raise PlanningError(f"{name} outside field bounds")

    start_node = field.nearest_node(start.xy)
    goal_node = field.nearest_node(np.asarray(goal, dtype=float))
    if start_node in blocked or goal_node in blocked:
        raise PlanningError("start or goal cell is blocked")

    if start_node == goal_node:
        return WaypointPath(
            waypoints=field.node_position(*goal_node)[None, :], nodes=[goal_node]
        )

    frontier: list = [(0.0, 0, start_node, None)]
    came: dict[tuple[int, int], tuple[int, int] | None] = {}
    push_seq = 1
    cost_of = {start_node: 0.0}
    while frontier:
        cost, _, node, parent = heapq.heappop(frontier)
        if node in came:
            continue
        came[node] = parent
        if node == goal_node:
            break
        for nb in _neighbors(field, *node):
            if nb in came or nb in blocked:
                continue
            new_cost = cost + manhattan(field.node_position(*node),
                                        field.node_position(*nb))
            if nb not in cost_of or new_cost < cost_of[nb]:
                cost_of[nb] = new_cost
                heapq.heappush(frontier, (new_cost, push_seq, nb, node))
                push_seq += 1

    if goal_node not in came:
        raise PlanningError("goal unreachable on the corridor grid")

    nodes = []
    node: tuple[int, int] | None = goal_node
    while node is not None:
        nodes.append(node)
        node = came[node]
    nodes.reverse()
    nodes = nodes[1:]  # drop the start cell
    waypoints = np.stack([field.node_position(*n) for n in nodes])
    return WaypointPath(waypoints=waypoints, nodes=nodes)


def nearest_unvisited(path: WaypointPath, pose: Pose2D) -> tuple[int, np.ndarray, float]:
    """Unvisited waypoint minimizing Manhattan distance; path order breaks ties.

    Returns (index, waypoint, distance). Raises if everything is visited
    (the caller should be checking the goal instead).
    """
    if path.all_visited:
        raise LookupError("all waypoints visited")
    best_i, best_d = -1, math.inf
    px, py = pose.x, pose.y
    for i in range(path.n_wp):
        if path.visited[i]:
            continue
        d = abs(path.waypoints[i, 0] - px) + abs(path.waypoints[i, 1] - py)
        if d < best_d:
            best_i, best_d = i, d
    return best_i, path.waypoints[best_i], float(best_d)


def assigned_manhattan(path: WaypointPath, start: Pose2D) -> float:
    """Total Manhattan length of the assigned route, start through every leg."""
    total = manhattan(start.xy, path.waypoints[0])
    for i in range(path.n_wp - 1):
        total += manhattan(path.waypoints[i], path.waypoints[i + 1])
    return total
