"""Single-row tracking world: one irregularly curved crop row, front camera.

The robot straddles the row and follows it with symmetric four-wheel
steering at constant forward speed, controlling only the yaw rate. Rewards
follow the single-row scheme: +1 when the track error is under the
threshold, -1 per step, +10 on reaching the goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Config
from .kinematics import FORWARD_SPEED, SteeringMode, body_twist_from_mode
from .perception import CameraModel, TrackError, detect_row, render_camera
from .world import Pose2D, integrate


@dataclass(frozen=True)
class RowStepResult:
    reward: float
    terminated: bool
    truncated: bool
    info: dict


class RowTrackEnv:
    """Follow a sinusoidally curved row from its start to a goal 9 m along."""

    def __init__(self, config: Config | None = None):
        self.cfg = config or Config()
        rc = self.cfg.rowtrack
        self.cam = CameraModel(mount="front", config=self.cfg.camera)
        n = int(round(rc.row_length / rc.plant_spacing)) + 1
        ys = np.arange(n) * rc.plant_spacing
        xs = self._curve(ys)
        self.plants = np.stack([xs, ys], axis=1)
        self.goal = np.array([self._curve(rc.row_length), rc.row_length])
        self.pose: Pose2D | None = None
        self._rng: np.random.Generator | None = None
        self._steps = 0
        self._active = False
        self._distance = 0.0
        self._errors: list[float] = []
        self.signed_offset: float | None = None

    def _curve(self, y):
        rc = self.cfg.rowtrack
        return rc.curve_amplitude * np.sin(2.0 * math.pi * y / rc.curve_wavelength)

    def reset(self, seed: int) -> dict:
        self.pose = Pose2D(float(self._curve(0.0)), 0.0, math.pi / 2)
        self._rng = np.random.default_rng(np.random.SeedSequence([seed, 0x20E7]))
        self._steps = 0
        self._active = True
        self._distance = 0.0
        self._errors = []
        self.signed_offset = None
        return self._sense()

    @property
    def steps(self) -> int:
        return self._steps

    @property
    def sim_time(self) -> float:
        return self._steps * self.cfg.env.dt

    @property
    def distance_travelled(self) -> float:
        return self._distance

    @property
    def track_errors(self) -> list[float]:
        return list(self._errors)

    def _sense(self) -> dict:
        img = render_camera(self.pose, self.cam, self.plants,
                            self.cfg.rowtrack.foliage_radius,
                            int(self._rng.integers(2**63)))
        seg, err = detect_row(img, self.cam, self.cfg.hough,
                              rng_seed=int(self._rng.integers(2**63)))
        center = self.cam.default_error
        self.signed_offset = None if seg is None else (seg.center_x - center) / center
        return {"error": err, "segment": seg}

    def step(self, action: float) -> RowStepResult:
        if not self._active:
            raise RuntimeError("episode over; call reset()")
        action = float(np.clip(action, -1.0, 1.0))
        twist = body_twist_from_mode(SteeringMode.SYMMETRIC_4WS, action, 1.0,
                                     self.cfg.geometry)
        n = max(1, self.cfg.env.substeps)
        sub_dt = self.cfg.env.dt / n
        reached = False
        for _ in range(n):
            new_pose = integrate(self.pose, SteeringMode.SYMMETRIC_4WS, twist, sub_dt)
            self._distance += math.hypot(new_pose.x - self.pose.x, new_pose.y - self.pose.y)
            self.pose = new_pose
            if math.hypot(self.pose.x - self.goal[0], self.pose.y - self.goal[1]) \
                    <= self.cfg.env.goal_radius:
                reached = True
                break
        self._steps += 1

        sense = self._sense()
        err: TrackError = sense["error"]
        self._errors.append(err.value)
        lateral_dev = abs(self.pose.x - float(self._curve(self.pose.y)))

        lost = (lateral_dev > self.cfg.rowtrack.lateral_fail
                or self.pose.y < -1.0
                or self.pose.y > self.cfg.rowtrack.row_length + 1.0)
        terminated = reached or lost
        truncated = (not terminated) and self._steps >= self.cfg.rowtrack.max_steps
        reward = (1.0 if err.value < self.cfg.env.cam_error_threshold else 0.0) - 1.0
        if reached:
            reward += 10.0
        if terminated or truncated:
            self._active = False
        return RowStepResult(
            reward=reward,
            terminated=terminated,
            truncated=truncated,
            info={
                "error": err.value,
                "detected": err.detected,
                "signed_offset": self.signed_offset,
                "pose": (self.pose.x, self.pose.y, self.pose.heading),
                "goal_reached": reached,
                "lost": lost,
                "lateral_dev": lateral_dev,
                "step": self._steps,
            },
        )
