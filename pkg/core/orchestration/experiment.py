"""
Experiment orchestration.

One ExperimentRunner owns one output directory and produces every artifact
of an experiment from its config:

    <out>/data/                    dataset (manifest, features, labels)
    <out>/checkpoints/model.json   selected parameters
    <out>/checkpoints/last.json    parameters after the final epoch
    <out>/epoch_log.csv            one row per epoch
    <out>/thresholds.json          tuned per-class thresholds (weak systems)
    <out>/decode/<split>_*.tsv     decoded sequences, intervals and tags
    <out>/metrics.csv              metric, split, value
    <out>/frames/<split>_<id>.csv  frame_time, class, probability
    <out>/loss_analysis.csv        false-alarm / miss loss table

No artifact carries a timestamp; identical config and seed reproduce
identical files.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from configs import ConfigError
from core.decoding import (
    best_path_decode_ctc,
    best_path_decode_weak,
    intervals_from_frames,
    write_intervals,
    write_sequences,
    write_tags,
)
from core.evaluation import (
    MetricsReport,
    SegmentCounts,
    apply_thresholds,
    count_decisions,
    localization_statistic,
    per_corpus,
    reference_matrix,
    segment_activity,
    segment_counts,
    segment_max_scores,
    tune_thresholds,
)
from core.evaluation.thresholds import TuningResult
from core.models.bag import SPLITS, Bag, Dataset
from core.models.config import ConfigHash, ExperimentConfig, ModelConfig, ThresholdTarget
from core.models.labels import LabelKind, WeakLabel
from core.models.predictions import FramePredictions, ThresholdVector
from core.networks import SequenceNetwork
from core.objectives import bag_prediction, loss_analysis, pooling_for
from core.training import TrainResult, train, write_epoch_log
from infra.data.dataset_store import MANIFEST, load_dataset, save_dataset
from infra.data.synthgen import generate

logger = logging.getLogger(__name__)

FRAME_COLUMNS = ["frame_time", "class", "probability"]


def _write_json(path: Path, payload: Dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class ExperimentRunner:
    """Runs the stages of one experiment against its output directory."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self._dataset: Optional[Dataset] = None

    # -- paths --------------------------------------------------------------

    @property
    def data_dir(self) -> Path:
        return self.out / "data"

    @property
    def model_path(self) -> Path:
        return self.out / "checkpoints" / "model.json"

    @property
    def last_model_path(self) -> Path:
        return self.out / "checkpoints" / "last.json"

    @property
    def epoch_log_path(self) -> Path:
        return self.out / "epoch_log.csv"

    @property
    def thresholds_path(self) -> Path:
        return self.out / "thresholds.json"

    @property
    def metrics_path(self) -> Path:
        return self.out / "metrics.csv"

    @property
    def loss_analysis_path(self) -> Path:
        return self.out / "loss_analysis.csv"

    @property
    def is_weak(self) -> bool:
        return self.config.objective.kind.is_weak

    # -- data ---------------------------------------------------------------

    def gen_data(self) -> Path:
        """Generate the synthetic dataset and write it under <out>/data."""
        if self.config.synth is None:
            raise ConfigError("gen-data needs dataset.synth in the experiment config")
        dataset = generate(self.config.synth)
        manifest = save_dataset(dataset, self.data_dir)
        self._dataset = dataset
        return manifest

    def dataset(self) -> Dataset:
        """
        The experiment's dataset.

        An explicit dataset.path is loaded as is. Otherwise <out>/data is reused
        when its fingerprint matches the synth config, and regenerated if not.
        """
        if self._dataset is not None:
            return self._dataset
        if self.config.dataset_path is not None:
            self._dataset = load_dataset(self.config.dataset_path)
            return self._dataset

        expected = ConfigHash.of(self.config.synth).hash_value
        if (self.data_dir / MANIFEST).exists():
            dataset = load_dataset(self.data_dir)
            if dataset.metadata.get("fingerprint") == expected:
                self._dataset = dataset
                return dataset
            logger.warning("dataset_fingerprint_mismatch", extra={"path": str(self.data_dir)})
        self.gen_data()
        return self._dataset

    def model_config(self, dataset: Dataset) -> ModelConfig:
        return ModelConfig.from_architecture(
            self.config.architecture,
            input_dim=dataset.feature_dim,
            num_classes=dataset.num_classes,
            head=self.config.objective.kind.head,
            input_frame_rate=dataset.frame_rate,
        )

    # -- training -----------------------------------------------------------

    def _checkpoint_metadata(self, dataset: Dataset, result: TrainResult) -> Dict:
        return {
            "fingerprint": self.config.fingerprint,
            "objective": self.config.objective.kind.value,
            "averaging": self.config.objective.averaging.value,
            "class_names": list(dataset.class_names),
            "best_epoch": result.best_epoch,
            "epochs": len(result.records),
        }

    def train(self) -> TrainResult:
        """Train from a seeded initialization; writes checkpoints and the epoch log."""
        dataset = self.dataset()
        network = SequenceNetwork.initialize(self.model_config(dataset), self.config.seed)
        result = train(network, dataset, self.config.objective, self.config.train)

        metadata = self._checkpoint_metadata(dataset, result)
        result.network.save(self.model_path, metadata)
        result.last_network.save(self.last_model_path, metadata)
        write_epoch_log(result.records, self.epoch_log_path)
        logger.info("train_artifacts_written", extra={
            "model": str(self.model_path),
            "epoch_log": str(self.epoch_log_path),
            "best_epoch": result.best_epoch,
        })
        return result

    def network(self) -> SequenceNetwork:
        if not self.model_path.exists():
            raise FileNotFoundError(f"no trained model at {self.model_path}; run train first")
        return SequenceNetwork.load(self.model_path)

    # -- thresholds ---------------------------------------------------------

    def _require_weak(self, operation: str) -> None:
        if not self.is_weak:
            raise ConfigError(f"{operation} applies to max and noisy-or systems only")

    def _bag_scores(self, predictions: Sequence[FramePredictions]) -> np.ndarray:
        pooling = pooling_for(self.config.objective.kind)
        return np.vstack([bag_prediction(p.values, pooling).values for p in predictions])

    def _segment_scores(self, bags: Sequence[Bag], predictions: Sequence[FramePredictions]) -> Tuple[np.ndarray, np.ndarray]:
        """Stacked (segment max score, segment reference activity) over ``bags``."""
        length = self.config.evaluation.segment_length
        num_classes = self.dataset().num_classes
        scores, refs = [], []
        for bag, prediction in zip(bags, predictions):
            scores.append(segment_max_scores(prediction.class_probabilities(), prediction.frame_rate,
                                             bag.duration, length))
            refs.append(segment_activity(bag.require(LabelKind.STRONG), bag.duration, num_classes, length))
        return np.vstack(scores), np.vstack(refs)

    def tune_thresholds(self, split: str = "valid") -> TuningResult:
        """Tune per-class thresholds on ``split`` and write thresholds.json."""
        self._require_weak("tune-thresholds")
        dataset = self.dataset()
        bags = dataset.split(split)
        if not bags:
            raise ValueError(f"cannot tune thresholds on the empty '{split}' split")
        predictions = self.network().predict_bags(bags)

        target = self.config.evaluation.threshold_target
        if target == ThresholdTarget.SED:
            scores, refs = self._segment_scores(bags, predictions)
        else:
            scores = self._bag_scores(predictions)
            refs = reference_matrix([bag.require(LabelKind.WEAK) for bag in bags], dataset.num_classes)
        result = tune_thresholds(scores, refs, seed=self.config.seed)

        _write_json(self.thresholds_path, {
            "class_names": list(dataset.class_names),
            "thresholds": list(result.thresholds.values),
            "target": target.value,
            "split": split,
            "phase1_f1": result.phase1_f1,
            "final_f1": result.final_f1,
            "accepted_steps": result.accepted_steps,
            "passes": result.passes,
        })
        return result

    def thresholds(self) -> ThresholdVector:
        """Thresholds from thresholds.json, tuning them first if the file is missing."""
        if not self.thresholds_path.exists():
            self.tune_thresholds()
        payload = json.loads(self.thresholds_path.read_text(encoding="utf-8"))
        return ThresholdVector(tuple(float(t) for t in payload["thresholds"]))

    # -- decoding -----------------------------------------------------------

    def decode(self, split: str = "test") -> List[Path]:
        """Decode ``split``: token sequences for every system, intervals and tags for weak ones."""
        dataset = self.dataset()
        bags = dataset.split(split)
        predictions = self.network().predict_bags(bags)
        names = dataset.class_names
        decode_dir = self.out / "decode"
        written = []

        if not self.is_weak:
            rows = [(bag.bag_id, best_path_decode_ctc(p.values)) for bag, p in zip(bags, predictions)]
            written.append(write_sequences(rows, names, decode_dir / f"{split}_sequences.tsv"))
        else:
            thresholds = self.thresholds()
            sequences = [(bag.bag_id, best_path_decode_weak(p.class_probabilities()))
                         for bag, p in zip(bags, predictions)]
            intervals = [
                (bag.bag_id, interval)
                for bag, p in zip(bags, predictions)
                for interval in intervals_from_frames(p.class_probabilities(), thresholds, p.frame_rate)
            ]
            decisions = apply_thresholds(self._bag_scores(predictions), thresholds) if bags else []
            tags = [(bag.bag_id, WeakLabel(frozenset(np.flatnonzero(row).tolist())))
                    for bag, row in zip(bags, decisions)]
            written.append(write_sequences(sequences, names, decode_dir / f"{split}_sequences.tsv"))
            written.append(write_intervals(intervals, names, decode_dir / f"{split}_intervals.tsv"))
            written.append(write_tags(tags, names, decode_dir / f"{split}_tags.tsv"))

        logger.info("decode_written", extra={"split": split, "bags": len(bags), "files": [str(p) for p in written]})
        return written

    # -- evaluation ---------------------------------------------------------

    def _evaluate_weak_split(self, report: MetricsReport, split: str, bags: Sequence[Bag],
                             predictions: Sequence[FramePredictions], thresholds: ThresholdVector) -> None:
        num_classes = self.dataset().num_classes
        length = self.config.evaluation.segment_length
        kinds = set.intersection(*(set(bag.label_kinds) for bag in bags))

        if LabelKind.WEAK in kinds:
            labels = [bag.weak for bag in bags]
            tagging = count_decisions(apply_thresholds(self._bag_scores(predictions), thresholds),
                                      reference_matrix(labels, num_classes))
            report.add("tagging_f1", split, tagging.f1)
            report.add("tagging_precision", split, tagging.precision)
            report.add("tagging_recall", split, tagging.recall)
            report.add("localization", split, localization_statistic(predictions, labels))

        if LabelKind.STRONG in kinds:
            counts = SegmentCounts.concat([
                segment_counts(intervals_from_frames(p.class_probabilities(), thresholds, p.frame_rate),
                               bag.strong, bag.duration, num_classes, length)
                for bag, p in zip(bags, predictions)
            ])
            report.add("segment_er", split, counts.error_rate)
            report.add("segment_f1", split, counts.f1)
            report.add("segment_precision", split, counts.detection.precision)
            report.add("segment_recall", split, counts.detection.recall)
            report.add("segment_substitutions", split, counts.substitutions)
            report.add("segment_deletions", split, counts.deletions)
            report.add("segment_insertions", split, counts.insertions)

            scores, refs = self._segment_scores(bags, predictions)
            if self.config.evaluation.oracle and refs.any():
                oracle = tune_thresholds(scores, refs, seed=self.config.seed)
                oracle_counts = SegmentCounts.from_activity(apply_thresholds(scores, oracle.thresholds), refs)
                report.add("oracle_segment_er", split, oracle_counts.error_rate)
                report.add("oracle_segment_f1", split, oracle_counts.f1)

        if LabelKind.SEQUENTIAL in kinds:
            pairs = [(bag.sequential, best_path_decode_weak(p.class_probabilities()))
                     for bag, p in zip(bags, predictions)]
            if any(ref for ref, _ in pairs):
                report.add("per", split, per_corpus(pairs))

    def evaluate(self, splits: Sequence[str] = SPLITS) -> MetricsReport:
        """Score every non-empty split and write metrics.csv."""
        dataset = self.dataset()
        network = self.network()
        report = MetricsReport()
        thresholds = self.thresholds() if self.is_weak else None

        for split in splits:
            bags = dataset.split(split)
            if not bags:
                continue
            predictions = network.predict_bags(bags)
            if self.is_weak:
                self._evaluate_weak_split(report, split, bags, predictions, thresholds)
            else:
                pairs = [(bag.require(LabelKind.SEQUENTIAL), best_path_decode_ctc(p.values))
                         for bag, p in zip(bags, predictions)]
                if any(ref for ref, _ in pairs):
                    report.add("per", split, per_corpus(pairs))

        report.write_csv(self.metrics_path)
        logger.info("metrics_written", extra={"path": str(self.metrics_path), "rows": len(report.rows)})
        return report

    # -- inspection ---------------------------------------------------------

    def dump_frames(self, split: str = "test", recording: Optional[str] = None) -> Path:
        """
        Per-frame probabilities of one recording as (frame_time, class, probability)
        rows, frame by frame, classes in id order. Blank columns are left out.
        """
        dataset = self.dataset()
        bags = dataset.split(split)
        if recording is None:
            if not bags:
                raise ValueError(f"split '{split}' is empty")
            bag = bags[0]
        else:
            matches = [b for b in bags if b.bag_id == recording]
            if not matches:
                raise KeyError(f"no recording '{recording}' in split '{split}'")
            bag = matches[0]

        prediction = self.network().predict(bag.features, bag.bag_id)
        probs = prediction.class_probabilities()
        frames, classes = probs.shape
        frame = pd.DataFrame({
            "frame_time": np.repeat(prediction.frame_times(), classes),
            "class": np.tile(np.array(dataset.class_names[:classes], dtype=object), frames),
            "probability": probs.reshape(-1),
        }, columns=FRAME_COLUMNS)

        path = self.out / "frames" / f"{split}_{bag.bag_id}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.10g")
        logger.info("frames_dumped", extra={"path": str(path), "rows": len(frame)})
        return path

    def analyze_losses(self) -> Path:
        """Write the false-alarm / miss loss table."""
        table = loss_analysis()
        self.loss_analysis_path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(self.loss_analysis_path, index=False, float_format="%.10g")
        logger.info("loss_analysis_written", extra={"path": str(self.loss_analysis_path), "rows": len(table)})
        return self.loss_analysis_path
