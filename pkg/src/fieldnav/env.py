"""Episodic crop-field environment: mode arbitration, observations, rewards.

One instance owns its world state and is strictly single-threaded. Every
source of randomness (field jitter, start/goal, camera noise, detection
shuffle) derives from the reset seed, so a (seed, action sequence) pair
replays to bit-identical step results.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kinematics as kin
from .config import Config
from .kinematics import SteeringMode
from .perception import CameraModel, TrackError, detect_row, render_camera
from .planner import WaypointPath, manhattan, plan
from .world import (EpisodeSetup, FieldMap, Pose2D, collision_check,
                    generate_field, integrate, out_of_bounds, sample_episode,
                    wrap_angle)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-step reward terms; ``total`` is always their plain sum."""

    r_dist: float
    r_ctrl: float
    r_cam: float
    r_wp: float
    r_goal: float
    r_time: float
    total: float = dc_field(init=False)

    def __post_init__(self) -> None:
        if not -1.0 <= self.r_dist <= 1.0:
            raise ValueError(f"r_dist {self.r_dist} outside [-1, 1]")
        if not -1.0 <= self.r_ctrl <= 0.0:
            raise ValueError(f"r_ctrl {self.r_ctrl} outside [-1, 0]")
        if self.r_cam not in (0.0, 1.0):
            raise ValueError(f"r_cam {self.r_cam} not in {{0, 1}}")
        if not 0.0 <= self.r_wp <= 100.0:
            raise ValueError(f"r_wp {self.r_wp} outside [0, 100]")
        if self.r_goal not in (-100.0, 0.0, 100.0):
            raise ValueError(f"r_goal {self.r_goal} not in {{-100, 0, 100}}")
        if self.r_time != -1.0:
            raise ValueError("r_time must be -1 every step")
        object.__setattr__(
            self, "total",
            self.r_dist + self.r_ctrl + self.r_cam + self.r_wp + self.r_goal + self.r_time,
        )

    def to_dict(self) -> dict:
        return {
            "r_dist": self.r_dist, "r_ctrl": self.r_ctrl, "r_cam": self.r_cam,
            "r_wp": self.r_wp, "r_goal": self.r_goal, "r_time": self.r_time,
            "total": self.total,
        }


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: RewardBreakdown
    terminated: bool
    truncated: bool
    info: dict

    def __post_init__(self) -> None:
        if self.terminated and self.truncated:
            raise ValueError("terminated and truncated cannot both be set")


MODE_NAMES = {
    SteeringMode.SYMMETRIC_4WS: "symmetric_4ws",
    SteeringMode.ZERO_TURN: "zero_turn",
    SteeringMode.LATERAL: "lateral",
}
OBS_SIZE = 21


class CropFieldEnv:
    """Multi-row navigation episode with automatic steering-mode arbitration.

    The continuous action is the commanded rate in [-1, 1]; everything else
    (mode choice, forward-speed sign) is derived from the nearest unvisited
    waypoint, mirroring the navigation strategy the policy is trained under.
    """

    def __init__(self, config: Config | None = None, trace=None):
        self.cfg = config or Config()
        self.geom = self.cfg.geometry
        self.robot_radius = self.geom.footprint_halfdiag + self.cfg.env.collision_margin
        self.front_cam = CameraModel(mount="front", config=self.cfg.camera)
        self.rear_cam = CameraModel(mount="rear", config=self.cfg.camera)
        self.max_wheel_speed = kin.max_wheel_speed(self.geom)
        self.trace = trace

        self.field: FieldMap | None = None
        self.setup: EpisodeSetup | None = None
        self.path: WaypointPath | None = None
        self.pose: Pose2D | None = None
        self._active = False
        self._rng: np.random.Generator | None = None
        self._steps = 0
        self._history: list[float] = []
        self._joints = np.zeros(8)
        self._errors = (TrackError(120.0, False), TrackError(120.0, False))
        self._distance_travelled = 0.0
        self._episode_seed: int | None = None
        self._zero_turn_latch = False

    # -- episode lifecycle ---------------------------------------------------

    def reset(self, seed: int) -> np.ndarray:
        """Start a new episode: fresh field jitter, start/goal, waypoint plan."""
        ss = np.random.SeedSequence(seed)
        field_seed, episode_seed, stream_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(3))
        self.field = generate_field(field_seed, self.cfg.field)
        self.setup = sample_episode(self.field, episode_seed, self.robot_radius)
        self.path = plan(self.field, self.setup.start_pose, self.setup.goal)
        self.pose = self.setup.start_pose
        self._rng = np.random.default_rng(stream_seed)
        self._steps = 0
        self._history = [0.0] * self.cfg.env.history_len
        self._joints = np.zeros(8)
        self._distance_travelled = 0.0
        self._active = True
        self._episode_seed = int(seed)
        self._zero_turn_latch = False
        self._errors = self._sense()
        obs = self._observe()
        if self.trace is not None:
            self.trace.write_header(self)
        return obs

    def reset_custom(
        self,
        field: FieldMap,
        start_pose: Pose2D,
        goal: np.ndarray,
        waypoints: np.ndarray,
        seed: int = 0,
    ) -> np.ndarray:
        """Start an episode on a prebuilt field with a fixed waypoint route
        (scripted courses bypass sampling and planning)."""
        self.field = field
        self.setup = EpisodeSetup(
            start_pose=start_pose, goal=np.asarray(goal, dtype=float),
            rng_seed=int(seed), start_node=(0, 0), goal_node=(0, 0),
        )
        self.path = WaypointPath(
            waypoints=np.asarray(waypoints, dtype=float),
            nodes=[(i, 0) for i in range(len(waypoints))],
        )
        self.pose = start_pose
        self._rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5EED]))
        self._steps = 0
        self._history = [0.0] * self.cfg.env.history_len
        self._joints = np.zeros(8)
        self._distance_travelled = 0.0
        self._active = True
        self._episode_seed = int(seed)
        self._zero_turn_latch = False
        self._errors = self._sense()
        return self._observe()

    @property
    def observation_size(self) -> int:
        return OBS_SIZE

    @property
    def md_max(self) -> float:
        return self.field.manhattan_diameter

    @property
    def goal(self) -> np.ndarray:
        return self.setup.goal

    @property
    def distance_travelled(self) -> float:
        return self._distance_travelled

    @property
    def steps(self) -> int:
        return self._steps

    @property
    def sim_time(self) -> float:
        return self._steps * self.cfg.env.dt

    # -- mode arbitration ----------------------------------------------------

    def select_mode(self, pose: Pose2D, waypoint: np.ndarray) -> tuple[SteeringMode, float]:
        """Choose the steering configuration from the offset to the waypoint.

        Cross-row dominant offsets select lateral movement (never inside a
        crop section); along-row offsets select symmetric 4WS with the speed
        sign chosen by whether the waypoint is ahead of the heading
        half-plane. A heading error to the row axis beyond the zero-turn
        threshold overrides both, and zero-turn is held (hysteresis) until
        the correction is essentially complete, so lateral legs never run
        with a tilted heading.
        """
        he = self._row_axis_error(pose.heading)
        if he > math.radians(self.cfg.env.zero_turn_threshold_deg):
            self._zero_turn_latch = True
        elif he <= math.radians(self.cfg.env.zero_turn_release_deg):
            self._zero_turn_latch = False
        if self._zero_turn_latch:
            return SteeringMode.ZERO_TURN, 1.0
        dx = float(waypoint[0]) - pose.x
        dy = float(waypoint[1]) - pose.y
        if abs(dx) > abs(dy):
            if not self.field.in_crop_section(pose.xy):
                return SteeringMode.LATERAL, 1.0
            # cross-row target while between the rows: lateral movement is
            # restricted here, so drive along the row toward the exit
            if abs(dy) < 1e-9:
                dy = math.copysign(1.0, pose.y) if pose.y != 0.0 else 1.0
            ahead = dy * math.sin(pose.heading)
        else:
            ahead = dx * math.cos(pose.heading) + dy * math.sin(pose.heading)
        return SteeringMode.SYMMETRIC_4WS, (1.0 if ahead >= 0.0 else -1.0)

    @staticmethod
    def _row_axis_error(heading: float) -> float:
        """Angular distance from the heading to the nearer row-axis direction."""
        return min(abs(wrap_angle(heading - math.pi / 2)),
                   abs(wrap_angle(heading + math.pi / 2)))

    # -- stepping ------------------------------------------------------------

    def step(self, action: float) -> StepResult:
        if not self._active:
            raise RuntimeError("episode is over; call reset() first")
        action = float(action)
        if not math.isfinite(action):
            raise ValueError("non-finite action")

        _, waypoint, _ = self.target_waypoint()
        mode, v_sign = self.select_mode(self.pose, waypoint)
        twist = kin.body_twist_from_mode(mode, action, v_sign, self.geom)
        self._joints = self._joint_vector(mode, action, v_sign)

        events = self._sweep_motion(mode, twist)
        self._steps += 1

        visited_now = events["waypoint_visited"]
        r_wp = 100.0 / self.path.n_wp if visited_now is not None else 0.0

        # post-motion distances: the progress reward tracks the current route
        # waypoint; the divergence cutoff uses the nearest of ALL waypoints
        # (wandering away from the whole route fails, but a step that just
        # passed a waypoint keeps its shelter through the corner)
        _, _, md_after = self.target_waypoint()
        md_after = min(md_after, self.md_max)
        md_any = float(np.min(
            np.abs(self.path.waypoints[:, 0] - self.pose.x)
            + np.abs(self.path.waypoints[:, 1] - self.pose.y)
        ))
        dist_goal = float(np.hypot(*(self.pose.xy - self.goal)))

        terminated = False
        truncated = False
        r_goal = 0.0
        if events["collision"] or events["out_of_bounds"]:
            terminated, r_goal = True, -100.0
        elif events["goal"]:
            terminated, r_goal = True, 100.0
        elif md_any >= self.cfg.env.md_terminate:
            terminated, r_goal = True, -100.0
        elif self._steps > self.cfg.env.max_steps:
            truncated, r_goal = True, -100.0

        prev_action = self._history[-1]
        self._history = self._history[1:] + [action]
        self._errors = self._sense()
        e1, e2 = self._errors
        thr = self.cfg.env.cam_error_threshold

        reward = RewardBreakdown(
            r_dist=-md_after / self.md_max,
            r_ctrl=-abs(prev_action - action) / 2.0,
            r_cam=1.0 if (e1.value <= thr or e2.value <= thr) else 0.0,
            r_wp=r_wp,
            r_goal=r_goal,
            r_time=-1.0,
        )
        if terminated or truncated:
            self._active = False
        info = {
            "mode": MODE_NAMES[mode],
            "v_sign": v_sign,
            "action": action,
            "collision": events["collision"],
            "out_of_bounds": events["out_of_bounds"],
            "goal_reached": bool(events["goal"]),
            "waypoint_visited": visited_now,
            "md": md_after,
            "md_any": md_any,
            "dist_goal": dist_goal,
            "pose": (self.pose.x, self.pose.y, self.pose.heading),
            "joints": self._joints.copy(),
            "track_errors": (e1.value, e2.value),
            "step": self._steps,
        }
        result = StepResult(self._observe(), reward, terminated, truncated, info)
        if self.trace is not None:
            self.trace.write_step(self, result)
        return result

    def _sweep_motion(self, mode: SteeringMode, twist) -> dict:
        """Integrate the step in substeps, detecting events along the sweep.

        One step moves up to v*dt = 0.6 m, which is twice the waypoint/goal
        radius, so endpoint-only checks would tunnel through the event
        regions; events bind at the first substep where they hold and a
        terminal event freezes the pose there.
        """
        n = max(1, self.cfg.env.substeps)
        sub_dt = self.cfg.env.dt / n
        events = {"collision": False, "goal": False, "waypoint_visited": None,
                  "out_of_bounds": False}
        wp_radius = self.cfg.env.waypoint_radius
        for _ in range(n):
            new_pose = integrate(self.pose, mode, twist, sub_dt)
            self._distance_travelled += math.hypot(new_pose.x - self.pose.x,
                                                   new_pose.y - self.pose.y)
            self.pose = new_pose
            if collision_check(self.pose, self.field, self.robot_radius):
                events["collision"] = True
                return events
            if out_of_bounds(self.pose, self.field):
                events["out_of_bounds"] = True
                return events
            if events["waypoint_visited"] is None:
                for i in range(self.path.n_wp):
                    if self.path.visited[i]:
                        continue
                    if manhattan(self.pose.xy, self.path.waypoints[i]) <= wp_radius:
                        self.path.mark_visited(i)
                        events["waypoint_visited"] = i
                        break
            if np.hypot(*(self.pose.xy - self.goal)) <= self.cfg.env.goal_radius:
                events["goal"] = True
                return events
        return events

    def _joint_vector(self, mode: SteeringMode, action: float, v_sign: float) -> np.ndarray:
        cmd = kin.wheel_command_for_mode(self.geom, mode, action, v_sign)
        return np.array(cmd.steer_angles + cmd.wheel_omegas)

    # -- sensing and observations ---------------------------------------------

    def _sense(self) -> tuple[TrackError, TrackError]:
        plants = self.field.plants
        foliage = self.cfg.field.foliage_radius
        errors = []
        for cam in (self.front_cam, self.rear_cam):
            noise_seed = int(self._rng.integers(2**63))
            img = render_camera(self.pose, cam, plants, foliage, noise_seed)
            _, err = detect_row(img, cam, self.cfg.hough,
                                rng_seed=int(self._rng.integers(2**63)))
            errors.append(err)
        return errors[0], errors[1]

    def render_views(self) -> tuple[np.ndarray, np.ndarray]:
        """Camera images at the current pose (for dumps and demos)."""
        plants = self.field.plants
        foliage = self.cfg.field.foliage_radius
        return (
            render_camera(self.pose, self.front_cam, plants, foliage, 0),
            render_camera(self.pose, self.rear_cam, plants, foliage, 1),
        )

    def target_waypoint(self) -> tuple[int | None, np.ndarray, float]:
        """The route waypoint currently being tracked: the first unvisited
        one. Raw nearest-by-Manhattan can point across a crop row (the metric
        ignores the crops), which makes mode arbitration oscillate; route
        order keeps progress monotone. Returns (index, waypoint, Manhattan)."""
        if self.path.all_visited:
            return None, self.goal, manhattan(self.pose.xy, self.goal)
        i = int(np.argmin(self.path.visited))
        wp = self.path.waypoints[i]
        return i, wp, manhattan(self.pose.xy, wp)

    def raw_observation(self) -> dict:
        _, wp, md = self.target_waypoint()
        e1, e2 = self._errors
        return {
            "pose": (self.pose.x, self.pose.y, self.pose.heading),
            "goal": tuple(self.goal),
            "track_errors": (e1.value, e2.value),
            "history": tuple(self._history),
            "waypoint": tuple(wp),
            "md": md,
            "joints": self._joints.copy(),
        }

    def normalize_observation(self, raw: dict) -> np.ndarray:
        """Scale every component into [-1, 1]; clamp and warn on overshoot."""
        hx, hy = self.field.half_extents
        x0, y0, x1, y1 = self.field.bounds
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        px, py, heading = raw["pose"]
        gx, gy = raw["goal"]
        wx, wy = raw["waypoint"]
        joints = raw["joints"]
        vec = np.concatenate([
            [(px - cx) / hx, (py - cy) / hy, heading / math.pi],
            [(gx - cx) / hx, (gy - cy) / hy],
            [raw["track_errors"][0] / 120.0, raw["track_errors"][1] / 120.0],
            list(raw["history"]),
            [(wx - cx) / hx, (wy - cy) / hy, raw["md"] / self.md_max],
            joints[:4] / (math.pi / 2.0),
            joints[4:] / self.max_wheel_speed,
        ])
        if np.any(np.abs(vec) > 1.0 + 1e-9):
            worst = float(np.max(np.abs(vec)))
            log.warning("observation component exceeded its range (%.4f); clamping", worst)
        return np.clip(vec, -1.0, 1.0)

    def _observe(self) -> np.ndarray:
        obs = self.normalize_observation(self.raw_observation())
        assert obs.shape == (OBS_SIZE,)
        return obs

    # -- manual stepping (teleoperation) --------------------------------------

    def step_manual(self, mode: SteeringMode, action: float, v_sign: float = 1.0) -> dict:
        """Drive the world directly with a commanded steering mode.

        Used by the teleoperation service: same physics, sensing, and event
        flags as step(), but nothing terminates and no reward is produced.
        """
        action = float(np.clip(action, -1.0, 1.0))
        twist = kin.body_twist_from_mode(mode, action, v_sign, self.geom)
        self._joints = self._joint_vector(mode, action, v_sign)
        events = self._sweep_motion(mode, twist)
        self._steps += 1
        self._errors = self._sense()
        e1, e2 = self._errors
        return {
            "mode": MODE_NAMES[mode],
            "v_sign": v_sign,
            "action": action,
            "pose": (self.pose.x, self.pose.y, self.pose.heading),
            "joints": self._joints.copy(),
            "track_errors": (e1.value, e2.value),
            "collision": events["collision"],
            "out_of_bounds": events["out_of_bounds"],
            "step": self._steps,
        }
