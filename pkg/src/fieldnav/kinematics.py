"""Closed-form steering kinematics for a 4WIS4WID robot.

Maps body-level motion commands to the eight joint targets (four steer
angles, four wheel angular velocities) for the three supported steering
configurations: symmetric four-wheel steering, zero-turn, and lateral.

Wheel numbering: 1 = front-right, 2 = front-left, 3 = rear-left,
4 = rear-right (wheels 1 and 4 carry the ``+omega*t/2`` velocity term,
wheels 2 and 3 the ``-omega*t/2`` term). Positive yaw rate turns left.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

STEER_LIMIT = math.pi / 2  # steering joints limited to [-90 deg, +90 deg]


class SteeringMode(enum.Enum):
    """Steering configuration active for one control step."""

    SYMMETRIC_4WS = "symmetric_4ws"
    ZERO_TURN = "zero_turn"
    LATERAL = "lateral"


class KinematicsError(ValueError):
    """Raised for commands outside the validity region of a steering mode."""


class DegenerateSteering(KinematicsError):
    """Raised when a check is vacuous, e.g. cotangents of zero steer angles."""


@dataclass(frozen=True)
class RobotGeometry:
    """Chassis constants: wheelbase ``l``, track ``t``, wheel radius ``R`` (m).

    The stock configuration keeps track equal to wheelbase, but the general
    ``t != l`` case is supported throughout.
    """

    wheelbase: float = 0.2
    track: float = 0.2
    wheel_radius: float = 0.1

    def __post_init__(self) -> None:
        for name in ("wheelbase", "track", "wheel_radius"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")

    @property
    def footprint_halfdiag(self) -> float:
        """Half diagonal of the l x t chassis rectangle."""
        return 0.5 * math.hypot(self.wheelbase, self.track)


@dataclass(frozen=True)
class BodyTwist:
    """Commanded planar body motion: longitudinal speed and yaw rate.

    The slip-free model has no independent lateral velocity; sideways motion
    is produced by the dedicated lateral steering configuration instead.
    """

    v_x: float = 0.0
    omega: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v_x) and math.isfinite(self.omega)):
            raise ValueError(f"non-finite twist ({self.v_x}, {self.omega})")


@dataclass(frozen=True)
class WheelCommand:
    """Per-wheel joint targets: steer angles (rad) and wheel speeds (rad/s)."""

    steer_angles: tuple[float, float, float, float]
    wheel_omegas: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        for th in self.steer_angles:
            if not math.isfinite(th) or abs(th) > STEER_LIMIT + 1e-12:
                raise ValueError(f"steer angle {th} outside [-pi/2, pi/2]")
        for w in self.wheel_omegas:
            if not math.isfinite(w):
                raise ValueError("non-finite wheel speed")


@dataclass(frozen=True)
class ModeTwist:
    """Body motion with the mode's lateral component made explicit."""

    v_x: float = 0.0
    omega: float = 0.0
    v_lat: float = 0.0


def _steer_angle(num: float, den: float) -> float:
    # Two-argument arctangent over the travel-direction-folded velocity ray.
    # A negative denominator means this wheel would have to roll opposite to
    # the others (turning center inside the track width), which the model
    # cannot express within the +/-90 deg steering limits.
    if num == 0.0 and den == 0.0:
        return 0.0
    if den < 0.0:
        raise KinematicsError(
            "required steer angle exceeds +/-90 deg "
            "(2|v_x| < |omega|*t puts the turning center inside the track)"
        )
    return math.atan2(num, den)


def symmetric_4ws(geom: RobotGeometry, twist: BodyTwist) -> WheelCommand:
    """Symmetric four-wheel steering: wheel speeds and angles for (v_x, omega).

    Wheel speed magnitudes are the resultant rim speeds divided by the wheel
    radius, signed by the direction of travel; steer angles are the arctangent
    of the resultant velocity at each wheel, giving the antisymmetric pattern
    theta1 = -theta4, theta2 = -theta3.

    Raises KinematicsError for v_x == 0 with omega != 0 (that regime belongs
    to zero_turn) and for turns tight enough to need |angle| > 90 deg.
    """
    v_x, omega = twist.v_x, twist.omega
    if v_x == 0.0 and omega != 0.0:
        raise KinematicsError("v_x = 0 with omega != 0: use zero_turn instead")

    l, t, r = geom.wheelbase, geom.track, geom.wheel_radius
    sgn = math.copysign(1.0, v_x) if v_x != 0.0 else 0.0
    half_lw = 0.5 * omega * l
    fast = sgn * math.hypot(v_x + 0.5 * omega * t, half_lw) / r  # wheels 1, 4
    slow = sgn * math.hypot(v_x - 0.5 * omega * t, half_lw) / r  # wheels 2, 3

    s = -1.0 if v_x < 0.0 else 1.0  # fold reverse travel into the steer angle
    theta1 = _steer_angle(s * omega * l, s * (omega * t + 2.0 * v_x))
    theta2 = _steer_angle(s * omega * l, s * (-omega * t + 2.0 * v_x))
    return WheelCommand(
        steer_angles=(theta1, theta2, -theta2, -theta1),
        wheel_omegas=(fast, slow, slow, fast),
    )


def zero_turn(geom: RobotGeometry, omega: float) -> WheelCommand:
    """Rotation in place: wheels tangent to the chassis circumscribed circle.

    Angles are +/- arctan(l/t) (45 deg when the track equals the wheelbase)
    and are held even at omega == 0 so the stance is ready to spin.
    """
    if not math.isfinite(omega):
        raise KinematicsError("non-finite yaw rate")
    l, t, r = geom.wheelbase, geom.track, geom.wheel_radius
    w = omega * math.hypot(l, t) / (2.0 * r)
    a = math.atan(l / t)
    return WheelCommand(steer_angles=(a, -a, a, -a), wheel_omegas=(w, -w, -w, w))


def lateral(omega_wheel: float) -> WheelCommand:
    """Sideways rolling: all wheels at +90 deg, all spinning at omega_wheel.

    The sign of omega_wheel selects left/right sideways motion; body speed is
    omega_wheel * wheel radius under no-slip rolling.
    """
    if not math.isfinite(omega_wheel):
        raise KinematicsError("non-finite wheel speed")
    q = STEER_LIMIT
    w = omega_wheel
    return WheelCommand(steer_angles=(q, q, q, q), wheel_omegas=(w, w, w, w))


def check_kinematic_condition(cmd: WheelCommand, geom: RobotGeometry) -> float:
    """Residual of the slip-free steering condition for a symmetric command.

    Returns |cot(theta_outer) - cot(theta_inner) - (w_f + w_r)/l| using the
    front wheel pair; the front and rear tracks both equal ``geom.track``.
    Raises DegenerateSteering for straight-line commands (zero steer angles),
    where the cotangents are undefined and the condition is vacuous.
    """
    theta1, theta2 = cmd.steer_angles[0], cmd.steer_angles[1]
    if theta1 == 0.0 or theta2 == 0.0:
        raise DegenerateSteering("straight-line command: condition is vacuous")
    lhs = abs(1.0 / math.tan(theta1) - 1.0 / math.tan(theta2))
    rhs = (geom.track + geom.track) / geom.wheelbase
    return abs(lhs - rhs)


# Action-to-twist rescaling used by the environment: forward speed is held
# constant in symmetric 4WS and the commanded rate is rescaled by 3 in the
# zero-turn and lateral configurations.
FORWARD_SPEED = 3.0
RATE_RESCALE = 3.0


def body_twist_from_mode(
    mode: SteeringMode,
    action_omega: float,
    v_x_sign: float = 1.0,
    geom: RobotGeometry | None = None,
) -> ModeTwist:
    """Map a policy/teleop action in [-1, 1] to the active mode's body twist.

    Symmetric 4WS drives at +/-3.0 m/s with omega = action; zero-turn yaws at
    3 * action rad/s; lateral translates at 3 * action * wheel_radius m/s
    (wheel angular velocity 3 * action under no-slip rolling).
    """
    if not math.isfinite(action_omega) or abs(action_omega) > 1.0 + 1e-12:
        raise KinematicsError(f"action {action_omega!r} outside [-1, 1]")
    action_omega = min(1.0, max(-1.0, action_omega))
    if mode is SteeringMode.SYMMETRIC_4WS:
        return ModeTwist(v_x=math.copysign(FORWARD_SPEED, v_x_sign), omega=action_omega)
    if mode is SteeringMode.ZERO_TURN:
        return ModeTwist(omega=RATE_RESCALE * action_omega)
    r = (geom or RobotGeometry()).wheel_radius
    return ModeTwist(v_lat=RATE_RESCALE * action_omega * r)


def wheel_command_for_mode(
    geom: RobotGeometry, mode: SteeringMode, action_omega: float, v_x_sign: float = 1.0
) -> WheelCommand:
    """Joint targets for a mode/action pair (the teleoperation entry point)."""
    tw = body_twist_from_mode(mode, action_omega, v_x_sign, geom)
    if mode is SteeringMode.SYMMETRIC_4WS:
        return symmetric_4ws(geom, BodyTwist(tw.v_x, tw.omega))
    if mode is SteeringMode.ZERO_TURN:
        return zero_turn(geom, tw.omega)
    return lateral(RATE_RESCALE * min(1.0, max(-1.0, action_omega)))


def max_wheel_speed(geom: RobotGeometry) -> float:
    """Largest commanded wheel speed over all modes and in-range actions."""
    l, t, r = geom.wheelbase, geom.track, geom.wheel_radius
    # symmetric 4WS at |omega| = 1: fastest wheel
    s4 = math.hypot(FORWARD_SPEED + 0.5 * t, 0.5 * l) / r
    zt = RATE_RESCALE * math.hypot(l, t) / (2.0 * r)
    lat = RATE_RESCALE
    return max(s4, zt, lat)
