"""Command-line entry points: train, export, decode.

The trainer reads a YAML file holding TrainConfig fields plus an optional
out_dir; export/decode move symbols across the bridge files the link
simulator transmits. Batch tool: every run is a pure function of its
arguments and seeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import yaml

from .data import load_images
from .train import (
    TrainConfig,
    export_symbols,
    import_and_decode,
    load_checkpoint,
    save_checkpoint,
    train,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nncodec", description="Toy neural image codec for link-symbol transport."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train_p = sub.add_parser("train", help="train a model from a YAML config")
    train_p.add_argument("--config", required=True, help="YAML with TrainConfig fields")

    export_p = sub.add_parser("export", help="encode images to a bridge symbol file")
    export_p.add_argument("--ckpt", required=True)
    export_p.add_argument("--images", required=True, help="image folder or .npy/.npz")
    export_p.add_argument("--out", required=True, help="output .smsy path")

    decode_p = sub.add_parser("decode", help="decode a received bridge symbol file")
    decode_p.add_argument("--ckpt", required=True)
    decode_p.add_argument("--in", dest="infile", required=True, help="received .smsy path")
    decode_p.add_argument("--out", required=True, help="output .npy path for images")
    return parser


def _load_train_config(path: str) -> tuple[TrainConfig, str]:
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValueError("config must be a mapping")
    out_dir = raw.pop("out_dir", "nncodec-run")
    known = set(TrainConfig.__dataclass_fields__)
    for key in raw:
        if key not in known:
            raise ValueError(f"unknown config key: {key}")
    if "dataset" not in raw:
        raise ValueError("config must set dataset")
    return TrainConfig(**raw), str(out_dir)


def _cmd_train(args: argparse.Namespace) -> int:
    cfg, out_dir = _load_train_config(args.config)
    model, log = train(cfg)
    os.makedirs(out_dir, exist_ok=True)
    ckpt_path = os.path.join(out_dir, "model.pt")
    log_path = os.path.join(out_dir, "train_log.jsonl")
    save_checkpoint(model, cfg, ckpt_path)
    with open(log_path, "w") as fh:
        for record in log:
            fh.write(json.dumps(record) + "\n")
    last = log[-1]
    print(ckpt_path)
    print(log_path)
    print(
        "final epoch %d: mse %.5f, papr_p95 %.2f dB"
        % (last["epoch"], last["mse"], last["papr_p95_db"])
    )
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    model, cfg = load_checkpoint(args.ckpt)
    images = load_images(args.images)
    sym = export_symbols(model, images, args.out, cfg.norm_factor)
    print(args.out)
    print(f"{sym.size} symbols from {images.shape[0]} images")
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    model, cfg = load_checkpoint(args.ckpt)
    images = import_and_decode(model, args.infile, cfg.norm_factor)
    np.save(args.out, images)
    print(args.out)
    print(f"{images.shape[0]} images decoded")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"train": _cmd_train, "export": _cmd_export, "decode": _cmd_decode}
    try:
        return handlers[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
