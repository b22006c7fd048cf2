"""Scripted controllers: evaluation baselines and harness validators.

Controllers expose ``act(env, obs) -> action in [-1, 1]``. The oracle pilot
reads simulator state directly (it exists to validate the harness and to
upper-bound the navigation architecture); the policy adapter wraps a trained
network behind the same interface.
"""

from __future__ import annotations

import math

import numpy as np

from .kinematics import RATE_RESCALE, SteeringMode
from .world import wrap_angle


class PolicyController:
    """Trained-policy adapter (deterministic by default for evaluation)."""

    def __init__(self, policy, deterministic: bool = True, seed: int = 0):
        self.policy = policy
        self.deterministic = deterministic
        self.rng = np.random.default_rng(seed)

    def act(self, env, obs: np.ndarray) -> float:
        action, _, _, _ = self.policy.act(obs, self.rng, deterministic=self.deterministic)
        return action


class RandomController:
    """Uniform random actions; the evaluation floor."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def act(self, env, obs: np.ndarray) -> float:
        return float(self.rng.uniform(-1.0, 1.0))


def _axis_deviation(heading: float) -> tuple[float, float]:
    """(signed deviation from the nearer row axis, that axis direction)."""
    dev_up = wrap_angle(heading - math.pi / 2)
    dev_down = wrap_angle(heading + math.pi / 2)
    if abs(dev_up) <= abs(dev_down):
        return dev_up, math.pi / 2
    return dev_down, -math.pi / 2


class OracleWaypointPilot:
    """Drives every steering mode deliberately from privileged state.

    Zero-turn snaps the heading onto the row axis, symmetric 4WS regulates
    the corridor lateral offset through a small heading bias, and lateral
    movement runs toward the waypoint's cross-row offset. Built to validate
    the evaluation harness (it should succeed nearly always) and to stand in
    for navigation when no checkpoint is available.
    """

    def __init__(self, lateral_gain: float = 6.0, offset_gain: float = 6.0,
                 heading_gain: float = 8.0, max_heading_bias: float = math.radians(13)):
        self.lateral_gain = lateral_gain
        self.offset_gain = offset_gain
        self.heading_gain = heading_gain
        self.max_heading_bias = max_heading_bias

    def act(self, env, obs: np.ndarray = None) -> float:
        pose = env.pose
        wp_index, waypoint, _ = env.target_waypoint()
        mode, v_sign = env.select_mode(pose, waypoint)
        dt = env.cfg.env.dt
        dev, _axis = _axis_deviation(pose.heading)

        if mode is SteeringMode.ZERO_TURN:
            # rate that lands the heading on the axis within this step
            return float(np.clip(-dev / (RATE_RESCALE * dt), -1.0, 1.0))

        if mode is SteeringMode.LATERAL:
            e = pose.x - float(waypoint[0])
            # x motion per unit action is -sin(heading) * wheel speed scale
            ax = -math.sin(pose.heading)
            if abs(ax) < 0.5:
                return 0.0
            a = -self.lateral_gain * e / ax
            return float(np.clip(a, -1.0, 1.0))

        # symmetric 4WS: bias the heading so the corridor offset decays; on
        # corner approaches, track a small lateral offset toward the upcoming
        # turn, chosen so the corner visit fires just inside a step (the
        # post-visit residual stays small and the turn starts with a head
        # start instead of an overshoot-and-flap)
        target_x = float(waypoint[0])
        corner, turn = self._next_corner(env, wp_index)
        dist_c = math.inf if corner is None else abs(pose.y - float(corner[1]))
        if turn != 0.0 and dist_c < 0.65:
            # final approach: hold the heading level so the lateral leg
            # starts untilted (its mode has no yaw authority to recover)
            dev_target = 0.0
        else:
            if (turn != 0.0 and dist_c < 2.4 and abs(pose.x - target_x) < 0.31
                    and not env.field.in_crop_section(pose.xy)):
                step_len = 3.0 * dt
                residual_target = 0.2 * step_len
                c = (step_len - ((dist_c + residual_target) % step_len)) % step_len
                c = min(max(c, 0.02), 0.28)
                target_x += turn * c
            e = pose.x - target_x
            v_body = v_sign * 3.0
            sin_axis = 1.0 if _axis > 0 else -1.0
            dev_target = np.clip(self.offset_gain * e / (v_body * sin_axis),
                                 -self.max_heading_bias, self.max_heading_bias)
        return float(np.clip(self.heading_gain * (dev_target - dev), -1.0, 1.0))

    @staticmethod
    def _next_corner(env, wp_index: int | None):
        """The first waypoint ahead where the route turns across the rows,
        reached along the current corridor: (waypoint, turn direction)."""
        if wp_index is None:
            return None, 0.0
        wps = env.path.waypoints
        j = wp_index
        while j + 1 < env.path.n_wp:
            leg_x = float(wps[j + 1][0]) - float(wps[j][0])
            leg_y = float(wps[j + 1][1]) - float(wps[j][1])
            if abs(leg_x) > abs(leg_y):
                return wps[j], math.copysign(1.0, leg_x)
            j += 1
        return None, 0.0


class RowTrackController:
    """Steers on the signed camera offset to follow a single crop row."""

    def __init__(self, gain: float = 3.0, smooth: float = 0.5):
        self.gain = gain
        self.smooth = smooth
        self._last = 0.0

    def reset(self) -> None:
        self._last = 0.0

    def act(self, env, obs: np.ndarray = None) -> float:
        offset = env.signed_offset  # (center - line_x) / half_width, in [-1, 1]
        if offset is None:
            a = self._last * self.smooth
        else:
            a = float(np.clip(-self.gain * offset, -1.0, 1.0))
        self._last = a
        return a
