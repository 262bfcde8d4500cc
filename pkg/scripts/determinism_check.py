#!/usr/bin/env python3
"""
Determinism Check: run the same experiment twice, verify identical artifacts

1. Runs gen-data, train, tune-thresholds (weak systems), decode, evaluate and
   dump-frames for one config into two fresh output directories
2. Hashes every artifact (logs excluded; they carry timestamps)
3. Writes determinism_diff.json with the files that differ

Usage:
    python scripts/determinism_check.py --config small --work runs/determinism
"""

import argparse
import hashlib
import json
import logging
import os
import shutil
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from configs import ConfigLoader
from tools.milseq import EXIT_OK, run_subcommand

logger = logging.getLogger(__name__)

LOG_DIR = "logs"


def pipeline_commands(config: str, out: Path, weak: bool) -> List[List[str]]:
    common = ["--config", config, "--out", str(out), "--quiet"]
    commands = [["gen-data"], ["train"]]
    if weak:
        commands.append(["tune-thresholds"])
    commands += [["decode"], ["evaluate"], ["dump-frames"]]
    return [command + common for command in commands]


def run_pipeline(config: str, out: Path) -> int:
    """Run every stage into ``out``; returns the first non-zero exit status (0 if none)."""
    if out.exists():
        shutil.rmtree(out)
    weak = ConfigLoader().load_experiment(config).objective.kind.is_weak
    for argv in pipeline_commands(config, out, weak):
        status = run_subcommand(argv)
        if status != EXIT_OK:
            logger.error("determinism_stage_failed", extra={"argv": argv, "status": status})
            return status
    return EXIT_OK


def artifact_digests(directory: Path) -> Dict[str, str]:
    """Relative path -> sha256 of every artifact file under ``directory``."""
    digests = {}
    for path in sorted(directory.rglob("*")):
        relative = path.relative_to(directory)
        if path.is_file() and relative.parts[0] != LOG_DIR:
            digests[relative.as_posix()] = hashlib.sha256(path.read_bytes()).hexdigest()
    return digests


def compare_runs(first: Path, second: Path) -> Tuple[bool, Dict]:
    """
    Compare the artifacts of two runs.

    Returns:
        Tuple of (is_match, diff_report)
    """
    a = artifact_digests(first)
    b = artifact_digests(second)
    diff_report = {
        "run1_files": len(a),
        "run2_files": len(b),
        "only_in_run1": sorted(set(a) - set(b)),
        "only_in_run2": sorted(set(b) - set(a)),
        "different": sorted(name for name in set(a) & set(b) if a[name] != b[name]),
    }
    is_match = not (diff_report["only_in_run1"] or diff_report["only_in_run2"] or diff_report["different"])
    diff_report["artifacts_match"] = is_match
    return is_match, diff_report


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Run an experiment twice and diff its artifacts")
    parser.add_argument("--config", type=str, default="small", help="Config file or preset name")
    parser.add_argument("--work", type=str, default="runs/determinism", help="Working directory")
    args = parser.parse_args(argv)

    work = Path(args.work)
    print("\n" + "=" * 70)
    print(f"DETERMINISM CHECK: {args.config}")
    print("=" * 70)

    for run in ("run1", "run2"):
        status = run_pipeline(args.config, work / run)
        if status != EXIT_OK:
            print(f"\nFAIL: {run} exited with status {status}")
            return 1

    is_match, diff_report = compare_runs(work / "run1", work / "run2")
    diff_file = work / "determinism_diff.json"
    diff_file.write_text(json.dumps(diff_report, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    print(f"Artifacts per run: {diff_report['run1_files']} / {diff_report['run2_files']}")
    if is_match:
        print("\nOK: artifacts are byte-identical")
        print(f"Diff report: {diff_file}")
        return 0
    print(f"\nFAIL: {len(diff_report['different'])} artifacts differ")
    for name in diff_report["different"][:10]:
        print(f"  {name}")
    print(f"Diff report: {diff_file}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
