"""
End-to-end tests of the milseq command line on smoke-sized configs.
"""

import copy
import json
import os
import sys

import pandas as pd
import pytest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from configs import ConfigLoader
from core.evaluation import MetricsReport
from core.models.labels import LabelKind
from infra.data.dataset_store import save_dataset, strip_labels
from infra.data.synthgen import generate
from scripts.determinism_check import compare_runs, run_pipeline
from tools import milseq
from tools.milseq import EXIT_OK, EXIT_USAGE, run_subcommand


def _run(*argv):
    return run_subcommand(list(argv) + ["--quiet"])


def _write_config(tmp_path, document, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return str(path)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    """The small preset run once through every stage."""
    out = tmp_path_factory.mktemp("small")
    for command in ("gen-data", "train", "tune-thresholds", "decode", "evaluate", "dump-frames"):
        assert _run(command, "--config", "small", "--out", str(out)) == EXIT_OK, command
    return out


class TestPipeline:

    def test_artifacts_exist(self, small_run):
        for relative in ("data/manifest.json", "checkpoints/model.json", "checkpoints/last.json",
                         "epoch_log.csv", "thresholds.json", "metrics.csv",
                         "decode/test_sequences.tsv", "decode/test_intervals.tsv", "decode/test_tags.tsv"):
            assert (small_run / relative).exists(), relative
        assert list((small_run / "logs").glob("*.json"))

    def test_metrics_parse(self, small_run):
        report = MetricsReport.read_csv(small_run / "metrics.csv")
        metrics = {(row.metric, row.split) for row in report.rows}
        for split in ("train", "valid", "test"):
            for name in ("tagging_f1", "segment_er", "segment_f1", "localization", "per"):
                assert (name, split) in metrics
        assert 0.0 <= report.get("tagging_f1", "test") <= 100.0

    def test_epoch_log(self, small_run):
        table = pd.read_csv(small_run / "epoch_log.csv")
        assert list(table.columns) == ["epoch", "lr", "train_loss", "valid_loss", "clip_count", "clamp_count"]
        assert list(table["epoch"]) == [1, 2, 3]
        assert list(table["lr"]) == [0.1, 0.1, 0.05]

    def test_thresholds_file(self, small_run):
        payload = json.loads((small_run / "thresholds.json").read_text())
        assert payload["class_names"] == ["event_00", "event_01", "event_02"]
        assert len(payload["thresholds"]) == 3
        assert payload["final_f1"] >= payload["phase1_f1"]

    def test_frame_dump_rows(self, small_run):
        table = pd.read_csv(small_run / "frames" / "test_test_00000.csv")
        assert list(table.columns) == ["frame_time", "class", "probability"]
        assert len(table) == 30 * 3
        assert table["probability"].between(0.0, 1.0).all()


def test_frame_dump_row_count(tmp_path):
    document = copy.deepcopy(ConfigLoader().load_document("small"))
    document["dataset"]["synth"].update(num_classes=5, frames_per_bag=100, train_bags=8, valid_bags=2, test_bags=2)
    document["train"].update(epochs=1)
    config = _write_config(tmp_path, document)
    out = str(tmp_path / "run")
    assert _run("train", "--config", config, "--out", out) == EXIT_OK
    assert _run("dump-frames", "--config", config, "--out", out, "--recording", "test_00001") == EXIT_OK
    assert len(pd.read_csv(tmp_path / "run" / "frames" / "test_test_00001.csv")) == 500


def test_ctc_on_weak_only_data_is_rejected(tmp_path, caplog):
    document = copy.deepcopy(ConfigLoader().load_document("small"))
    dataset = strip_labels(generate(ConfigLoader().load_experiment("small").synth), LabelKind.WEAK)
    save_dataset(dataset, tmp_path / "weak_data")
    document["objective"] = {"kind": "ctc", "averaging": "frames"}
    document["dataset"] = {"path": str(tmp_path / "weak_data")}
    config = _write_config(tmp_path, document)
    with caplog.at_level("ERROR"):
        status = _run("train", "--config", config, "--out", str(tmp_path / "run"))
    assert status == EXIT_USAGE
    rejected = [r for r in caplog.records if r.getMessage() == "command_rejected"]
    assert rejected and "sequential" in rejected[0].error


class TestUsage:

    def test_unknown_subcommand(self):
        assert run_subcommand(["fit", "--config", "small"]) == EXIT_USAGE

    def test_missing_config(self):
        assert run_subcommand(["train"]) == EXIT_USAGE

    def test_bad_split(self):
        assert run_subcommand(["decode", "--config", "small", "--split", "dev"]) == EXIT_USAGE

    def test_malformed_config(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"objective": {"kind": "mean"}}')
        assert _run("train", "--config", str(path), "--out", str(tmp_path / "run")) == EXIT_USAGE

    def test_gen_data_needs_synth(self, tmp_path):
        document = copy.deepcopy(ConfigLoader().load_document("small"))
        document["dataset"] = {"path": str(tmp_path / "nowhere")}
        config = _write_config(tmp_path, document)
        assert _run("gen-data", "--config", config, "--out", str(tmp_path / "run")) == EXIT_USAGE

    def test_thresholds_rejected_for_ctc(self, tmp_path):
        assert _run("tune-thresholds", "--config", "ctc_phone", "--out", str(tmp_path / "run")) == EXIT_USAGE

    def test_parser_lists_every_subcommand(self):
        parser = milseq.build_parser()
        args = parser.parse_args(["dump-frames", "--config", "small"])
        assert args.split == "test"
        assert parser.parse_args(["tune-thresholds", "--config", "small"]).split == "valid"


def test_analyze_losses_without_config(tmp_path):
    assert _run("analyze-losses", "--out", str(tmp_path)) == EXIT_OK
    table = pd.read_csv(tmp_path / "loss_analysis.csv").set_index("case")
    assert table.loc["max_false_alarm_peak", "loss"] == pytest.approx(15.42, rel=0.01)
    assert table.loc["noisy_or_false_alarm_short", "loss"] >= 48.0


def test_reruns_are_byte_identical(tmp_path):
    assert run_pipeline("small", tmp_path / "run1") == EXIT_OK
    assert run_pipeline("small", tmp_path / "run2") == EXIT_OK
    is_match, report = compare_runs(tmp_path / "run1", tmp_path / "run2")
    assert is_match, report
    assert report["run1_files"] > 0
