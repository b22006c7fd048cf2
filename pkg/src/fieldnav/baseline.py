"""Skid-steer kinematics and a PD waypoint follower (the comparison baseline).

The skid-steer robot is modeled as an ideal differential drive: it must
rotate toward a target before making progress, which is exactly the
behavioral difference the comparison course exposes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PDConfig
from .kinematics import ModeTwist, SteeringMode
from .world import Pose2D, integrate, wrap_angle


def skid_steer_step(pose: Pose2D, v_cmd: float, omega_cmd: float, dt: float) -> Pose2D:
    """Unicycle-model integration (closed-form arc), shared with the world."""
    if not (math.isfinite(v_cmd) and math.isfinite(omega_cmd)):
        raise ValueError("non-finite command")
    return integrate(pose, SteeringMode.SYMMETRIC_4WS,
                     ModeTwist(v_x=v_cmd, omega=omega_cmd), dt)


@dataclass
class PDState:
    prev_heading_err: float = 0.0
    prev_dist: float = 0.0
    primed: bool = False


def pd_control(
    pose: Pose2D,
    target: np.ndarray,
    gains: PDConfig,
    state: PDState,
    dt: float,
) -> tuple[float, float]:
    """PD commands toward a target point, rotating before driving.

    The linear command is gated to near zero while the heading error exceeds
    the alignment gate, which produces the rotate-then-drive behavior of a
    skid-steer platform.
    """
    dx = float(target[0]) - pose.x
    dy = float(target[1]) - pose.y
    dist = math.hypot(dx, dy)
    heading_err = wrap_angle(math.atan2(dy, dx) - pose.heading)

    if state.primed:
        derr = (heading_err - state.prev_heading_err) / dt
        ddist = (dist - state.prev_dist) / dt
    else:
        derr = 0.0
        ddist = 0.0
        state.primed = True
    state.prev_heading_err = heading_err
    state.prev_dist = dist

    omega = gains.kp_ang * heading_err + gains.kd_ang * derr
    omega = float(np.clip(omega, -gains.omega_max, gains.omega_max))
    v = gains.kp_lin * dist + gains.kd_lin * ddist
    if abs(heading_err) > math.radians(gains.align_gate_deg):
        v *= 0.02
    v = float(np.clip(v, 0.0, gains.v_max))
    return v, omega


def run_waypoint_course(
    start: Pose2D,
    waypoints: np.ndarray,
    gains: PDConfig,
    dt: float = 0.2,
    reach_radius: float | None = None,
    final_radius: float = 0.3,
    max_steps: int = 4000,
) -> dict:
    """Drive the PD-controlled skid-steer robot through a waypoint list.

    Intermediate waypoints switch at ``reach_radius`` (the controller's
    tracking tolerance); the course ends inside ``final_radius`` of the last
    one. Both are checked densely along each step's motion. Returns path
    length, simulated time, the pose trace, and whether the course finished.
    """
    pose = start
    state = PDState()
    poses = [pose]
    distance = 0.0
    target_i = 0
    substeps = 5
    steps = 0
    finished = False
    reach = gains.reach_radius if reach_radius is None else reach_radius
    while steps < max_steps and not finished:
        target = waypoints[target_i]
        v, omega = pd_control(pose, target, gains, state, dt)
        for _ in range(substeps):
            new_pose = skid_steer_step(pose, v, omega, dt / substeps)
            distance += math.hypot(new_pose.x - pose.x, new_pose.y - pose.y)
            pose = new_pose
            final = target_i == len(waypoints) - 1
            radius = final_radius if final else reach
            if math.hypot(pose.x - float(target[0]), pose.y - float(target[1])) <= radius:
                if final:
                    finished = True
                    break
                target_i += 1
                target = waypoints[target_i]
        poses.append(pose)
        steps += 1
    return {
        "reached": finished,
        "distance": distance,
        "sim_time": steps * dt,
        "steps": steps,
        "poses": poses,
        "final_pose": pose,
    }
