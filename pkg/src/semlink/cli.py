"""Command line front end: run experiment scenarios or replay a manifest."""

from __future__ import annotations

import argparse
import sys

from .codec import BridgeFormatError
from .experiments import (
    COLUMNS,
    ConfigError,
    load_config,
    replay,
    run_experiment,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semlink",
        description="Deterministic MIMO-OFDM link experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write results + manifest")
    run_p.add_argument("--scenario", required=True, choices=sorted(COLUMNS))
    run_p.add_argument("--config", default=None, help="YAML config overlaying the defaults")
    run_p.add_argument("--seed", type=int, default=None, help="override the master seed")
    run_p.add_argument("--out", default="results", help="output directory")
    run_p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    shuffle = run_p.add_mutually_exclusive_group()
    shuffle.add_argument(
        "--shuffle-seed", type=int, default=None,
        help="pin the interleaver seed (scenarios with a shuffle option)",
    )
    shuffle.add_argument(
        "--no-shuffle", action="store_true",
        help="disable the interleaver (scenarios with a shuffle option)",
    )

    replay_p = sub.add_parser("replay", help="re-run the scenario recorded in a manifest")
    replay_p.add_argument("--manifest", required=True)
    replay_p.add_argument("--out", required=True, help="output directory for the rerun")
    replay_p.add_argument("--workers", type=int, default=1)
    return parser


def _apply_shuffle_overrides(config: dict, scenario: str, args: argparse.Namespace) -> None:
    if args.shuffle_seed is None and not args.no_shuffle:
        return
    section = config[scenario]
    if "shuffle" not in section:
        raise ConfigError(f"scenario {scenario} has no shuffle option")
    if args.no_shuffle:
        section["shuffle"] = False
    else:
        section["shuffle"] = True
        section["shuffle_seed"] = args.shuffle_seed


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            if args.seed is not None:
                config["master_seed"] = args.seed
            _apply_shuffle_overrides(config, args.scenario, args)
            csv_path, manifest_path = run_experiment(
                args.scenario, config, args.out, workers=args.workers
            )
        else:
            csv_path, manifest_path = replay(args.manifest, args.out, workers=args.workers)
    except (ConfigError, BridgeFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(csv_path)
    print(manifest_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
