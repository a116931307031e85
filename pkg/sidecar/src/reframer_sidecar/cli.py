"""Sidecar entry points: train a plan, serve checkpoints."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .data import PlanError
from .model import DecodeParams
from .server import ServingConfig, serve
from .training import PRESETS, execute_plan


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reframer-sidecar",
        description="Reference generation backend: staged training and /v1 serving.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="execute a training plan")
    p.add_argument("--plan", required=True, help="plan JSON emitted upstream")
    p.add_argument(
        "--data-root",
        help="pipeline workdir the plan's file paths are relative to "
        "(default: two directories above the plan file)",
    )
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.add_argument("--preset", choices=sorted(PRESETS), default="tiny")
    p.add_argument("--seed", type=int, default=13)

    p = sub.add_parser("serve", help="serve trained checkpoints over /v1")
    p.add_argument("--checkpoints", required=True, help="checkpoint directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--backend-id", dest="backend_id", default="sidecar-gru")
    p.add_argument("--default-max-tokens", dest="default_max_tokens", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.add_argument("--decode", choices=["greedy", "sample"], default="greedy")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--decode-seed", dest="decode_seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "train":
        try:
            chain = execute_plan(
                plan_path=Path(args.plan),
                out_dir=Path(args.out),
                preset_name=args.preset,
                seed=args.seed,
                data_root=Path(args.data_root) if args.data_root else None,
            )
        except (PlanError, FileNotFoundError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for path in chain:
            print(f"checkpoint: {path}")
        return 0

    config = ServingConfig(
        checkpoint_dir=Path(args.checkpoints),
        backend_id=args.backend_id,
        default_max_tokens=args.default_max_tokens,
        device=args.device,
        decode=DecodeParams(
            mode=args.decode, temperature=args.temperature, seed=args.decode_seed
        ),
        host=args.host,
        port=args.port,
    )
    serve(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
