"""Episode traces: JSON-lines logs shared by the env, harness, and telemetry.

A trace is one header line (config, seed, field, episode, waypoints) followed
by one line per step. Replaying re-runs the recorded actions through a fresh
environment built from the header; determinism makes the poses match
bit-for-bit, which ``verify_replay`` checks.
"""

from __future__ import annotations

import json
from pathlib import Path

from .config import Config, config_from_dict, config_to_dict
from .world import episode_to_dict, field_to_dict

TRACE_SCHEMA = 1


class TraceWriter:
    """Writes one episode (or teleop session) as JSON lines."""

    def __init__(self, path: str | Path, kind: str = "env"):
        if kind not in ("env", "teleop"):
            raise ValueError(f"unknown trace kind {kind!r}")
        self.path = Path(path)
        self.kind = kind
        self._fh = open(self.path, "w", encoding="utf-8")
        self._wrote_header = False

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _emit(self, record: dict) -> None:
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._fh.flush()

    def write_header(self, env) -> None:
        self._emit({
            "type": "header",
            "schema": TRACE_SCHEMA,
            "kind": self.kind,
            "seed": env._episode_seed,
            "config": config_to_dict(env.cfg),
            "field": field_to_dict(env.field),
            "episode": episode_to_dict(env.setup),
            "waypoints": env.path.waypoints.tolist(),
        })
        self._wrote_header = True

    def write_step(self, env, result) -> None:
        info = result.info
        self._emit({
            "type": "step",
            "step": info["step"],
            "mode": info["mode"],
            "action": info["action"],
            "v_sign": info["v_sign"],
            "pose": list(info["pose"]),
            "reward": result.reward.to_dict(),
            "terminated": result.terminated,
            "truncated": result.truncated,
            "md": info["md"],
            "dist_goal": info["dist_goal"],
            "track_errors": list(info["track_errors"]),
            "events": {
                "collision": info["collision"],
                "out_of_bounds": info["out_of_bounds"],
                "goal": info["goal_reached"],
                "waypoint": info["waypoint_visited"],
            },
        })

    def write_manual_step(self, frame: dict) -> None:
        self._emit({
            "type": "step",
            "step": frame["step"],
            "mode": frame["mode"],
            "action": frame["action"],
            "v_sign": frame["v_sign"],
            "pose": list(frame["pose"]),
            "track_errors": list(frame["track_errors"]),
            "events": {
                "collision": frame["collision"],
                "out_of_bounds": frame["out_of_bounds"],
            },
        })


def load_trace(path: str | Path) -> tuple[dict, list[dict]]:
    header = None
    steps = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec["type"] == "header":
                header = rec
            elif rec["type"] == "step":
                steps.append(rec)
    if header is None:
        raise ValueError(f"{path}: trace has no header line")
    if header.get("schema") != TRACE_SCHEMA:
        raise ValueError(f"unsupported trace schema {header.get('schema')!r}")
    return header, steps


def _mode_from_name(name: str):
    from .kinematics import SteeringMode

    return {
        "symmetric_4ws": SteeringMode.SYMMETRIC_4WS,
        "zero_turn": SteeringMode.ZERO_TURN,
        "lateral": SteeringMode.LATERAL,
    }[name]


def replay_trace(path: str | Path) -> tuple[list[tuple[float, float, float]], list[dict]]:
    """Re-run a recorded trace; returns (replayed poses, recorded steps)."""
    from .env import CropFieldEnv

    header, steps = load_trace(path)
    cfg = config_from_dict(header["config"], base=Config())
    env = CropFieldEnv(cfg)
    env.reset(header["seed"])
    poses = []
    if header["kind"] == "env":
        for rec in steps:
            result = env.step(rec["action"])
            poses.append(result.info["pose"])
            if result.terminated or result.truncated:
                break
    else:
        for rec in steps:
            frame = env.step_manual(_mode_from_name(rec["mode"]), rec["action"], rec["v_sign"])
            poses.append(frame["pose"])
    return poses, steps


def verify_replay(path: str | Path) -> bool:
    """True when a replay reproduces every recorded pose exactly."""
    poses, steps = replay_trace(path)
    if len(poses) != len(steps):
        return False
    for pose, rec in zip(poses, steps):
        if list(pose) != rec["pose"]:
            return False
    return True
