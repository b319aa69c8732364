"""Command-line entry points: fit, serve, init-base."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .config import TrainerConfig
from .errors import TrainerError
from .serving import serve_adapter
from .training import train_adapter


def _cmd_fit(args: argparse.Namespace) -> int:
    config = TrainerConfig(
        base_model_ref=args.base,
        rank=args.rank,
        alpha=args.alpha,
        dropout=args.dropout,
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        seed=args.seed,
    )
    adapter_dir, report = train_adapter(args.train, config, args.out)
    print(
        f"epoch 1 loss {report.per_epoch_loss[0]:.4f} -> "
        f"final loss {report.final_loss:.4f} "
        f"({report.wall_time_s:.1f}s), adapter at {adapter_dir}"
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    server = serve_adapter(args.adapter, args.base, args.port)
    print(f"serving on port {server.port}; Ctrl-C to stop")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def _cmd_init_base(args: argparse.Namespace) -> int:
    from .data import load_training_records
    from .toy import build_toy_base

    records = load_training_records(args.train)
    corpus = [record["prompt"] + record["completion"] for record in records]
    build_toy_base(args.out, corpus, seed=args.seed)
    print(f"toy base model written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trainer", description="Low-rank adapter fine-tuning and serving"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="train adapters on an exported training file")
    fit.add_argument("--train", required=True)
    fit.add_argument("--base", required=True, help="base model path or identifier")
    fit.add_argument("--out", required=True, help="adapter output directory")
    fit.add_argument("--rank", type=int, default=8)
    fit.add_argument("--alpha", type=float, default=32.0)
    fit.add_argument("--dropout", type=float, default=0.1)
    fit.add_argument("--epochs", type=int, default=100)
    fit.add_argument("--batch", type=int, default=8)
    fit.add_argument("--lr", type=float, default=2e-4)
    fit.add_argument("--seed", type=int, default=0)
    fit.set_defaults(func=_cmd_fit)

    serve = sub.add_parser("serve", help="serve a trained adapter")
    serve.add_argument("--adapter", required=True)
    serve.add_argument("--base", required=True)
    serve.add_argument("--port", type=int, default=8080)
    serve.set_defaults(func=_cmd_serve)

    init = sub.add_parser(
        "init-base", help="build an offline toy base model from a training file"
    )
    init.add_argument("--train", required=True)
    init.add_argument("--out", required=True)
    init.add_argument("--seed", type=int, default=0)
    init.set_defaults(func=_cmd_init_base)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
