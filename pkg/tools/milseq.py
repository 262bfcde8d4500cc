#!/usr/bin/env python
"""
MILSEQ command line.

Usage:
    python tools/milseq.py gen-data --config configs/presets/small.json --out runs/small
    python tools/milseq.py train --config small --out runs/small
    python tools/milseq.py tune-thresholds --config small --out runs/small
    python tools/milseq.py decode --config small --out runs/small --split test
    python tools/milseq.py evaluate --config small --out runs/small
    python tools/milseq.py dump-frames --config small --out runs/small --split test --recording test_00000
    python tools/milseq.py analyze-losses --out runs/losses

--config takes a file path or the name of a preset under configs/presets.
Exit status: 0 when every artifact was written, 2 for configuration, label
or usage errors, 1 for any other failure.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from configs import ConfigError, ConfigLoader
from core.models.bag import SPLITS, MissingLabelError
from core.orchestration.experiment import ExperimentRunner
from infra.logging.json_logging import setup_logging, teardown_logging

logger = logging.getLogger("milseq")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

SUBCOMMANDS = ("gen-data", "train", "tune-thresholds", "decode", "evaluate", "dump-frames", "analyze-losses")


class UsageError(Exception):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="milseq", description="Weakly supervised sequence learning experiments")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument(
            "--config",
            type=str,
            required=name != "analyze-losses",
            help="Experiment config file or preset name"
        )
        sub.add_argument("--seed", type=int, default=None, help="Override the config seed")
        sub.add_argument("--out", type=str, default=None, help="Override the output directory")
        sub.add_argument("--quiet", action="store_true", help="Suppress console logging")
        if name in ("decode", "dump-frames", "tune-thresholds"):
            sub.add_argument(
                "--split",
                choices=SPLITS,
                default="valid" if name == "tune-thresholds" else "test",
                help="Dataset split"
            )
        if name == "dump-frames":
            sub.add_argument("--recording", type=str, default=None, help="Recording id (default: first of split)")
    return parser


def _dispatch(args: argparse.Namespace, out: Path) -> None:
    if args.command == "analyze-losses" and args.config is None:
        from core.objectives import loss_analysis

        out.mkdir(parents=True, exist_ok=True)
        loss_analysis().to_csv(out / "loss_analysis.csv", index=False, float_format="%.10g")
        return

    config = ConfigLoader().load_experiment(args.config, seed=args.seed, output_dir=args.out)
    runner = ExperimentRunner(config)
    if args.command == "gen-data":
        runner.gen_data()
    elif args.command == "train":
        runner.train()
    elif args.command == "tune-thresholds":
        runner.tune_thresholds(args.split)
    elif args.command == "decode":
        runner.decode(args.split)
    elif args.command == "evaluate":
        runner.evaluate()
    elif args.command == "dump-frames":
        runner.dump_frames(args.split, args.recording)
    elif args.command == "analyze-losses":
        runner.analyze_losses()


def _output_dir(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return Path(args.out)
    if args.config is None:
        return Path("runs") / "loss_analysis"
    try:
        return Path(ConfigLoader().load_document(args.config).get("output_dir", "runs/experiment"))
    except ConfigError:
        return Path("runs") / "experiment"


def run_subcommand(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"milseq: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    out = _output_dir(args)
    setup_logging(out / "logs", name=args.command.replace("-", "_"), console=not args.quiet)
    try:
        logger.info("command_started", extra={"command": args.command, "config": args.config, "out": str(out)})
        _dispatch(args, out)
        logger.info("command_completed", extra={"command": args.command})
        return EXIT_OK
    except (ConfigError, MissingLabelError) as e:
        logger.error("command_rejected", extra={"command": args.command, "error": str(e),
                                                "error_type": type(e).__name__})
        return EXIT_USAGE
    except Exception as e:
        logger.exception("command_failed", extra={"command": args.command, "error": str(e),
                                                  "error_type": type(e).__name__})
        return EXIT_FAILURE
    finally:
        teardown_logging()


def main():
    sys.exit(run_subcommand())


if __name__ == "__main__":
    main()
