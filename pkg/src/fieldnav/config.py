"""Run configuration: defaults, JSON config files, and flag overrides.

A single nested dataclass tree covers the simulator, perception, training,
and baseline controller. ``load_config`` starts from the defaults, merges an
optional JSON document, then applies ``key.path=value`` overrides.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

from .kinematics import RobotGeometry


@dataclass(frozen=True)
class FieldConfig:
    """Crop field layout and domain-randomization ranges."""

    n_rows: int = 5
    plants_per_row: int = 8
    row_spacing: float = 1.2
    plant_spacing: float = 0.75
    plant_radius: float = 0.15       # collision footprint
    foliage_radius: float = 0.35     # rendered canopy, wider than the footprint
    jitter_max_deg: float = 1.5      # per-row orientation jitter, uniform +/-
    headland: float = 1.5            # clear ground beyond the row ends
    side_margin: float = 0.5         # bounds margin beyond the outer corridors
    grid_pitch: float = 1.0          # along-row waypoint pitch; cross-row
                                     # legs span one corridor (= row_spacing)

    @property
    def jitter_max(self) -> float:
        return math.radians(self.jitter_max_deg)


@dataclass(frozen=True)
class CameraConfig:
    """Ground-plane trapezoid camera: geometry and image dimensions."""

    image_width: int = 320
    image_height: int = 240
    cropped_width: int = 240         # central crop; default error 120 = half width
    forward_offset: float = 0.3      # near edge of the footprint ahead of center
    view_length: float = 2.0         # footprint depth
    near_half_width: float = 1.2
    far_half_width: float = 2.4
    noise_level: int = 18            # ground-texture noise amplitude (8-bit)


@dataclass(frozen=True)
class HoughConfig:
    """Probabilistic Hough transform parameters."""

    rho_res: float = 1.0
    theta_res_deg: float = 1.0
    vote_threshold: int = 20
    min_len: int = 30
    max_gap: int = 10


@dataclass(frozen=True)
class EnvConfig:
    """Episode contract: step timing, thresholds, rewards."""

    dt: float = 0.1
    max_steps: int = 500             # truncation once the step count exceeds this
    waypoint_radius: float = 0.3     # Manhattan radius marking a waypoint visited
    goal_radius: float = 0.3
    md_terminate: float = 1.5        # Manhattan divergence from nearest waypoint
    cam_error_threshold: float = 40.0
    history_len: int = 3
    zero_turn_threshold_deg: float = 15.0
    zero_turn_release_deg: float = 3.0   # hysteresis: rotate until realigned
    collision_margin: float = 0.02   # added to the chassis half-diagonal
    substeps: int = 8                # event-detection samples along each step


@dataclass(frozen=True)
class TrainConfig:
    """PPO hyperparameters and run bookkeeping."""

    learning_rate: float = 3.0e-4
    n_steps: int = 2048
    batch_size: int = 64
    n_epochs: int = 10
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_range: float = 0.2
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    max_grad_norm: float = 0.5
    hidden: int = 64
    log_std_init: float = 0.0
    total_steps: int = 200_000
    seed: int = 0
    checkpoint_every: int = 10       # updates between checkpoints

    def __post_init__(self) -> None:
        if self.n_steps % self.batch_size != 0:
            raise ValueError("batch_size must divide n_steps")
        for name in ("learning_rate", "n_steps", "batch_size", "n_epochs",
                     "gamma", "gae_lambda", "clip_range", "total_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class PDConfig:
    """Skid-steer PD controller gains, caps, and waypoint-switch radius."""

    kp_lin: float = 1.0
    kd_lin: float = 0.0
    kp_ang: float = 2.0
    kd_ang: float = 0.1
    v_max: float = 1.0
    omega_max: float = 1.5
    align_gate_deg: float = 30.0
    reach_radius: float = 0.1


@dataclass(frozen=True)
class RowTrackConfig:
    """Single-row tracking world: one irregular curved row, front camera only."""

    row_length: float = 9.0
    curve_amplitude: float = 0.3
    curve_wavelength: float = 9.0
    plant_spacing: float = 0.25
    foliage_radius: float = 0.08
    lateral_fail: float = 1.5        # give up when this far off the row
    max_steps: int = 500


@dataclass(frozen=True)
class Config:
    geometry: RobotGeometry = dc_field(default_factory=RobotGeometry)
    field: FieldConfig = dc_field(default_factory=FieldConfig)
    camera: CameraConfig = dc_field(default_factory=CameraConfig)
    hough: HoughConfig = dc_field(default_factory=HoughConfig)
    env: EnvConfig = dc_field(default_factory=EnvConfig)
    train: TrainConfig = dc_field(default_factory=TrainConfig)
    pd: PDConfig = dc_field(default_factory=PDConfig)
    rowtrack: RowTrackConfig = dc_field(default_factory=RowTrackConfig)


REDUCED_FIELD = {"field": {"n_rows": 3, "plants_per_row": 5}}


def _to_dict(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return obj


def config_to_dict(cfg: Config) -> dict:
    return _to_dict(cfg)


def _merge(base: Any, data: dict) -> Any:
    kwargs = {}
    names = {f.name: f for f in dataclasses.fields(base)}
    for key, value in data.items():
        if key not in names:
            raise KeyError(f"unknown config key {key!r} in {type(base).__name__}")
        current = getattr(base, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            kwargs[key] = _merge(current, value)
        else:
            kwargs[key] = value
    return dataclasses.replace(base, **kwargs)


def config_from_dict(data: dict, base: Config | None = None) -> Config:
    return _merge(base or Config(), data)


def _parse_scalar(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: Config, overrides: list[str]) -> Config:
    """Apply ``section.key=value`` strings on top of a config."""
    data: dict = {}
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key.path=value")
        path, _, raw = item.partition("=")
        node = data
        parts = path.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = _parse_scalar(raw.strip())
    return config_from_dict(data, base=cfg)


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> Config:
    cfg = Config()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = config_from_dict(json.load(fh), base=cfg)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def save_config(cfg: Config, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n", encoding="utf-8")
