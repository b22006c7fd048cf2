"""Live telemetry and teleoperation over a JSON WebSocket protocol.

Message envelope: {"type": ..., "seq": ..., "payload": {...}} with types
``frame`` (server -> clients, every control step), ``command`` (driver ->
server, zero-order hold), ``control`` (reset / pause / resume / record /
policy playback), and ``error``. The most recently connected client drives;
everyone else observes. The simulation loop itself is single-threaded; the
network layer only exchanges messages with it.
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import websockets

from .config import Config
from .env import MODE_NAMES, CropFieldEnv
from .kinematics import SteeringMode
from .trace import TraceWriter

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
_NAME_TO_MODE = {v: k for k, v in MODE_NAMES.items()}


@dataclass
class TeleopCommand:
    """Driver command: steering mode, rate in [-1, 1], forward-speed sign."""

    mode: SteeringMode = SteeringMode.SYMMETRIC_4WS
    omega: float = 0.0
    v_sign: float = 1.0

    @classmethod
    def from_payload(cls, payload: dict) -> "TeleopCommand":
        mode = _NAME_TO_MODE.get(payload.get("mode"))
        if mode is None:
            raise ValueError(f"unknown steering mode {payload.get('mode')!r}")
        omega = float(payload.get("omega", 0.0))
        if not np.isfinite(omega):
            raise ValueError("non-finite omega")
        v_sign = 1.0 if float(payload.get("v_sign", 1.0)) >= 0 else -1.0
        return cls(mode=mode, omega=float(np.clip(omega, -1.0, 1.0)), v_sign=v_sign)


class TelemetrySession:
    """One simulated robot plus its connected clients."""

    def __init__(self, config: Config, seed: int = 0, record_path: str | Path | None = None):
        self.cfg = config
        self.seed = seed
        self.env = CropFieldEnv(config)
        self.env.reset(seed)
        self.command = TeleopCommand()
        self.paused = False
        self.policy = None
        self._policy_obs = None
        self._last_reward = None
        self.seq = 0
        self.trace: TraceWriter | None = None
        if record_path is not None:
            self.start_recording(record_path)

    def start_recording(self, path: str | Path) -> None:
        self.trace = TraceWriter(path, kind="teleop")
        self.trace.write_header(self.env)

    def stop_recording(self) -> None:
        if self.trace is not None:
            self.trace.close()
            self.trace = None

    def reset(self, seed: int | None = None) -> None:
        if seed is not None:
            self.seed = int(seed)
        self._policy_obs = self.env.reset(self.seed)
        self._last_reward = None
        self.command = TeleopCommand()
        if self.trace is not None:
            self.trace.write_header(self.env)

    def load_policy(self, checkpoint: str) -> None:
        from .learner.policy import PolicyParams

        self.policy, _ = PolicyParams.load(checkpoint)
        self._policy_obs = self.env._observe()

    def unload_policy(self) -> None:
        self.policy = None
        self._last_reward = None

    def tick(self) -> dict:
        """Advance one control step and return the telemetry frame payload."""
        if self.paused:
            return self.frame_payload()
        if self.policy is not None and self.env._active:
            action, _, _, _ = self.policy.act(self._policy_obs, deterministic=True)
            result = self.env.step(action)
            self._policy_obs = result.observation
            self._last_reward = result.reward
            if result.terminated or result.truncated:
                self.reset(self.seed + 1)
        else:
            frame = self.env.step_manual(self.command.mode, self.command.omega,
                                         self.command.v_sign)
            self._last_reward = None
            if self.trace is not None:
                self.trace.write_manual_step(frame)
        self.seq += 1
        return self.frame_payload()

    def frame_payload(self) -> dict:
        env = self.env
        e1, e2 = env._errors
        return {
            "schema": PROTOCOL_VERSION,
            "t": env.sim_time,
            "pose": [env.pose.x, env.pose.y, env.pose.heading],
            "mode": MODE_NAMES[self.command.mode] if self.policy is None else "policy",
            "steer_angles": env._joints[:4].tolist(),
            "wheel_omegas": env._joints[4:].tolist(),
            "track_errors": [e1.value, e2.value],
            "reward": self._last_reward.to_dict() if self._last_reward else None,
            "waypoints": env.path.waypoints.tolist(),
            "visited": env.path.visited.tolist(),
            "goal": env.goal.tolist(),
            "bounds": list(env.field.bounds),
            "plants": env.field.plants.tolist(),
            "plant_radius": env.cfg.field.plant_radius,
            "foliage_radius": env.cfg.field.foliage_radius,
            "geometry": {
                "wheelbase": env.geom.wheelbase,
                "track": env.geom.track,
                "wheel_radius": env.geom.wheel_radius,
            },
            "camera": {
                "forward_offset": env.cfg.camera.forward_offset,
                "view_length": env.cfg.camera.view_length,
                "near_half_width": env.cfg.camera.near_half_width,
                "far_half_width": env.cfg.camera.far_half_width,
            },
            "paused": self.paused,
        }


class TelemetryServer:
    """WebSocket server broadcasting frames at the control rate.

    ``speed`` scales wall-clock pacing (1.0 = real time); tests run fast.
    """

    def __init__(self, config: Config | None = None, port: int = 8765, seed: int = 0,
                 speed: float = 1.0, record_path: str | Path | None = None):
        self.cfg = config or Config()
        self.port = port
        self.session = TelemetrySession(self.cfg, seed=seed, record_path=record_path)
        self.speed = speed
        self._clients: set = set()
        self._driver = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._stop: asyncio.Event | None = None
        self.bound_port: int | None = None
        self._started = threading.Event()

    # -- message handling ------------------------------------------------------

    async def _send(self, ws, type_: str, payload: dict) -> None:
        try:
            await ws.send(json.dumps(
                {"type": type_, "seq": self.session.seq, "payload": payload}))
        except websockets.ConnectionClosed:
            pass

    async def _error(self, ws, message: str) -> None:
        await self._send(ws, "error", {"message": message})

    async def _handle_message(self, ws, raw: str) -> None:
        try:
            msg = json.loads(raw)
            mtype = msg.get("type")
            payload = msg.get("payload") or {}
        except (json.JSONDecodeError, AttributeError):
            await self._error(ws, "malformed message")
            return
        if mtype == "command":
            if ws is not self._driver:
                await self._error(ws, "observer commands are ignored")
                return
            try:
                self.session.command = TeleopCommand.from_payload(payload)
            except ValueError as exc:
                await self._error(ws, str(exc))
        elif mtype == "control":
            action = payload.get("action")
            if action == "reset":
                self.session.reset(payload.get("seed"))
            elif action == "pause":
                self.session.paused = True
            elif action == "resume":
                self.session.paused = False
            elif action == "play_policy":
                try:
                    self.session.load_policy(payload["checkpoint"])
                except Exception as exc:  # surface load errors to the client
                    await self._error(ws, f"policy load failed: {exc}")
            elif action == "teleop":
                self.session.unload_policy()
            elif action == "record":
                self.session.start_recording(payload["path"])
            elif action == "stop_record":
                self.session.stop_recording()
            else:
                await self._error(ws, f"unknown control action {action!r}")
        else:
            await self._error(ws, f"unknown message type {mtype!r}")

    async def _handler(self, ws) -> None:
        self._clients.add(ws)
        self._driver = ws  # last connected client drives
        await self._send(ws, "frame", self.session.frame_payload())
        try:
            async for raw in ws:
                await self._handle_message(ws, raw)
        finally:
            self._clients.discard(ws)
            if self._driver is ws:
                self._driver = next(iter(self._clients), None)

    # -- simulation loop ---------------------------------------------------------

    async def _sim_loop(self) -> None:
        dt = self.cfg.env.dt / max(self.speed, 1e-6)
        while not self._stop.is_set():
            payload = self.session.tick()
            if self._clients:
                websockets.broadcast(
                    self._clients,
                    json.dumps({"type": "frame", "seq": self.session.seq,
                                "payload": payload}))
            try:
                await asyncio.wait_for(self._stop.wait(), timeout=dt)
            except asyncio.TimeoutError:
                pass

    async def _main(self) -> None:
        self._loop = asyncio.get_running_loop()
        self._stop = asyncio.Event()
        async with websockets.serve(self._handler, "127.0.0.1", self.port) as server:
            self.bound_port = server.sockets[0].getsockname()[1]
            self._started.set()
            sim = asyncio.create_task(self._sim_loop())
            await self._stop.wait()
            sim.cancel()

    def serve_forever(self) -> None:
        """Run in the current thread until interrupted."""
        asyncio.run(self._main())

    def start(self) -> int:
        """Run in a background thread; returns the bound port."""
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=10):
            raise RuntimeError("telemetry server failed to start")
        return self.bound_port

    def stop(self) -> None:
        if self._loop is not None and self._stop is not None:
            self._loop.call_soon_threadsafe(self._stop.set)
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.session.stop_recording()
