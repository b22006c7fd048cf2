"""Command-line entry points: train, eval-rows, eval-nav, eval-cpath, replay,
teleop, dump-pipeline.

Configuration comes from one JSON file (--config) plus dotted overrides
(--set section.key=value); every run directory receives a copy of the
effective config alongside its outputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import REDUCED_FIELD, config_from_dict, load_config, save_config


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config value (dotted path)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", type=Path, default=None, help="run directory")


def _config(args) -> "Config":
    cfg = load_config(args.config, args.overrides)
    if getattr(args, "reduced", False):
        cfg = config_from_dict(REDUCED_FIELD, base=cfg)
    return cfg


def cmd_train(args) -> int:
    from .env import CropFieldEnv
    from .learner import train

    cfg = _config(args)
    if args.seed:
        cfg = config_from_dict({"train": {"seed": args.seed}}, base=cfg)
    if args.steps:
        cfg = config_from_dict({"train": {"total_steps": args.steps}}, base=cfg)
    out = args.out or Path("runs/train")
    env = CropFieldEnv(cfg)
    _, rows = train(cfg, env, run_dir=out, progress=True)
    last = rows[-1] if rows else {}
    print(f"trained {last.get('steps', 0)} steps; "
          f"final mean episode reward {last.get('mean_ep_reward', float('nan')):.1f}; "
          f"artifacts in {out}")
    return 0


def _controller(args, cfg):
    from .pilots import OracleWaypointPilot, PolicyController, RandomController

    if getattr(args, "random", False):
        return RandomController(seed=args.seed)
    if getattr(args, "checkpoint", None):
        from .learner.policy import PolicyParams

        policy, _ = PolicyParams.load(args.checkpoint)
        return PolicyController(policy)
    return OracleWaypointPilot()


def cmd_eval_nav(args) -> int:
    from .evalharness import run_navigation_suite

    cfg = _config(args)
    controller = _controller(args, cfg)
    out = args.out or Path("runs/eval-nav")
    summary = run_navigation_suite(controller, cfg, n_trials=args.trials,
                                   master_seed=args.seed, run_dir=out,
                                   trace_every=args.trace_every)
    summary.pop("records")
    print(json.dumps(summary, indent=2))
    return 0


def cmd_eval_rows(args) -> int:
    from .evalharness import run_row_tracking

    cfg = _config(args)
    out = args.out or Path("runs/eval-rows")
    summary = run_row_tracking(None, cfg, n_trials=args.trials,
                               master_seed=args.seed, run_dir=out)
    summary.pop("records")
    print(json.dumps(summary, indent=2))
    return 0


def cmd_eval_cpath(args) -> int:
    from .evalharness import run_cpath_comparison

    cfg = _config(args)
    controller = _controller(args, cfg)
    out = args.out or Path("runs/eval-cpath")
    summary = run_cpath_comparison(controller, cfg, master_seed=args.seed, run_dir=out)
    print(json.dumps(summary, indent=2))
    ok = (summary["distance_ratio"] < 1.0 and summary["time_ratio"] < 1.0
          and summary["fourwis"]["success"] and summary["skid"]["success"])
    print("4WIS4WID beats skid-steer on distance and time:", "yes" if ok else "NO")
    return 0


def cmd_replay(args) -> int:
    from .trace import replay_trace, verify_replay

    ok = verify_replay(args.trace)
    if args.out:
        poses, _ = replay_trace(args.trace)
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(
            "\n".join(json.dumps(list(p)) for p in poses) + "\n", encoding="utf-8")
    print(f"replay {'matches' if ok else 'DIVERGES FROM'} the recorded trace")
    return 0 if ok else 1


def cmd_teleop(args) -> int:
    from .telemetry import TelemetryServer

    cfg = load_config(args.field, args.overrides) if args.field else _config(args)
    server = TelemetryServer(cfg, port=args.port, seed=args.seed,
                             speed=args.speed, record_path=args.record)
    print(f"telemetry server on ws://127.0.0.1:{args.port} "
          f"(dt={cfg.env.dt}s, speed x{args.speed}); Ctrl-C to stop")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_dump_pipeline(args) -> int:
    from .env import CropFieldEnv
    from .perception import run_pipeline, save_stage_images

    cfg = _config(args)
    env = CropFieldEnv(cfg)
    env.reset(args.seed)
    for _ in range(args.steps):
        env.step(0.0)
    front, rear = env.render_views()
    out = args.out or Path("runs/pipeline")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, img, cam in (("front", front, env.front_cam), ("rear", rear, env.rear_cam)):
        _, err, stages = run_pipeline(img, cam, cfg.hough)
        written += save_stage_images(stages, str(out / name))
        print(f"{name}: track error {err.value:.1f} (detected={err.detected})")
    print("\n".join(written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fieldnav",
        description="4WIS4WID field-robot simulator, trainer, and teleoperation service",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the PPO policy")
    _add_common(p)
    p.add_argument("--steps", type=int, default=0, help="override total env steps")
    p.add_argument("--reduced", action="store_true", help="use the reduced field")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval-nav", help="multi-row navigation statistics")
    _add_common(p)
    p.add_argument("--trials", type=int, default=420)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--random", action="store_true", help="random-action floor")
    p.add_argument("--reduced", action="store_true")
    p.add_argument("--trace-every", type=int, default=0,
                   help="write a trace for every Nth trial")
    p.set_defaults(fn=cmd_eval_nav)

    p = sub.add_parser("eval-rows", help="single-row tracking statistics")
    _add_common(p)
    p.add_argument("--trials", type=int, default=500)
    p.set_defaults(fn=cmd_eval_rows)

    p = sub.add_parser("eval-cpath", help="C-course comparison vs skid-steer PD")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.set_defaults(fn=cmd_eval_cpath)

    p = sub.add_parser("replay", help="verify and re-emit a recorded trace")
    p.add_argument("trace", type=Path)
    p.add_argument("--out", type=Path, default=None, help="write replayed poses here")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("teleop", help="serve live telemetry + teleoperation")
    _add_common(p)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--field", type=Path, default=None,
                   help="field/config JSON (alias for --config)")
    p.add_argument("--speed", type=float, default=1.0,
                   help="simulation speed multiplier")
    p.add_argument("--record", type=Path, default=None,
                   help="record the session trace to this file")
    p.set_defaults(fn=cmd_teleop)

    p = sub.add_parser("dump-pipeline", help="write each detection stage as PNGs")
    _add_common(p)
    p.add_argument("--steps", type=int, default=3, help="steps before the dump")
    p.add_argument("--reduced", action="store_true")
    p.set_defaults(fn=cmd_dump_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
