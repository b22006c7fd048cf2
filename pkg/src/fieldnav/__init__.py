"""fieldnav: planar 4WIS4WID field-robot simulation and learning harness."""

from .config import Config, load_config
from .env import CropFieldEnv, RewardBreakdown, StepResult
from .kinematics import (BodyTwist, RobotGeometry, SteeringMode, WheelCommand,
                         body_twist_from_mode, check_kinematic_condition,
                         lateral, symmetric_4ws, zero_turn)
from .planner import WaypointPath, manhattan, nearest_unvisited, plan
from .world import (CropRow, EpisodeSetup, FieldMap, Pose2D, collision_check,
                    generate_field, integrate, sample_episode)

__version__ = "0.1.0"

__all__ = [
    "BodyTwist", "Config", "CropFieldEnv", "CropRow", "EpisodeSetup",
    "FieldMap", "Pose2D", "RewardBreakdown", "RobotGeometry", "StepResult",
    "SteeringMode", "WaypointPath", "WheelCommand", "body_twist_from_mode",
    "check_kinematic_condition", "collision_check", "generate_field",
    "integrate", "lateral", "load_config", "manhattan", "nearest_unvisited",
    "plan", "sample_episode", "symmetric_4ws", "zero_turn",
]
