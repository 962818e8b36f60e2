"""CLI: build-pairs, train, export, eval."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .data import (
    DatasetError,
    build_pairs,
    read_groups,
    read_pairs_jsonl,
    read_serialized_export,
    write_pairs_jsonl,
)
from .evaluate import eval_accuracy
from .export import ExportError, export_embeddings
from .model import FineTuneConfig, load_model, save_model
from .train import TrainingDiverged, train


def cmd_build_pairs(args) -> int:
    serialized = read_serialized_export(args.ser, args.index)
    groups = read_groups(args.groups)
    dataset = build_pairs(serialized, groups, size=args.size, seed=args.seed)
    write_pairs_jsonl(dataset, args.out)
    for name in ("train", "validation", "test"):
        recs = dataset.split(name)
        print(f"{name}: {len(recs)} pairs ({sum(r.label for r in recs)} positive)")
    return 0


def cmd_train(args) -> int:
    dataset = read_pairs_jsonl(args.pairs)
    config = FineTuneConfig(
        embedding_dim=args.dim,
        dropout=args.dropout,
        max_epochs=args.epochs,
        patience=args.patience,
        learning_rate=args.lr,
        seed=args.seed,
    )
    model, log = train(dataset, config)
    save_model(model, args.out)
    if args.log:
        Path(args.log).write_text(
            json.dumps({"config": asdict(config), **log.as_dict()}, indent=1, sort_keys=True) + "\n"
        )
    print(
        f"trained {len(log.epochs)} epochs (best epoch {log.best_epoch}, "
        f"val loss {log.best_val_loss:.4f}, early stop: {log.stopped_early})"
    )
    return 0


def cmd_export(args) -> int:
    model = load_model(args.model)
    n = export_embeddings(model, args.ser, args.index, args.out)
    print(f"exported {n} embeddings to {args.out}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    dataset = read_pairs_jsonl(args.pairs)
    records = dataset.split(args.split)
    acc = eval_accuracy(model, records, threshold=args.threshold)
    print(f"accuracy on {args.split} ({len(records)} pairs, threshold {args.threshold}): {acc:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lakediv-sidecar",
        description="Tuple-encoder fine-tuning and embedding export",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-pairs", help="pair dataset from a serialized export + groups file")
    p.add_argument("--ser", required=True, help="serialized-tuple line file")
    p.add_argument("--index", required=True, help="its index JSON")
    p.add_argument("--groups", required=True, help='JSON {"groups": {group: [tables]}}')
    p.add_argument("--size", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build_pairs)

    p = sub.add_parser("train", help="fine-tune the encoder on a pair dataset")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True, help="model artifact path (.pt)")
    p.add_argument("--log", default=None, help="training log JSON path")
    p.add_argument("--dim", type=int, default=768)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("export", help="embed a serialized export into interchange JSONL")
    p.add_argument("--model", required=True)
    p.add_argument("--ser", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("eval", help="pair accuracy at a distance threshold")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--split", default="test", choices=["train", "validation", "test"])
    p.add_argument("--threshold", type=float, default=0.7)
    p.set_defaults(fn=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (DatasetError, ExportError, TrainingDiverged, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
