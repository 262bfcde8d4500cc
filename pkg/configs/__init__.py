"""
MILSEQ Configuration Management

Loads experiment files, validates them against experiment.schema.json and
builds the typed configuration dataclasses.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import jsonschema

from core.models.config import (
    ArchitectureConfig,
    AveragingConvention,
    BatchConfig,
    BatchUnit,
    ConvLayerConfig,
    EvaluationConfig,
    ExperimentConfig,
    ObjectiveKind,
    ObjectiveSpec,
    ScheduleConfig,
    ScheduleKind,
    SelectionCriterion,
    SynthConfig,
    ThresholdTarget,
    TrainConfig,
)

CONFIG_DIR = Path(__file__).resolve().parent
SCHEMA_FILE = "experiment.schema.json"
PRESET_DIR = "presets"

PathLike = Union[str, Path]


class ConfigError(ValueError):
    """An experiment file is unreadable, violates the schema or holds invalid values."""


def strip_annotations(value: Any) -> Any:
    """Drop every key starting with '_' (free-text annotations), recursively."""
    if isinstance(value, dict):
        return {k: strip_annotations(v) for k, v in value.items() if not k.startswith("_")}
    if isinstance(value, list):
        return [strip_annotations(v) for v in value]
    return value


def _build_train(data: Dict[str, Any], seed: int) -> TrainConfig:
    schedule = data.get("schedule", {})
    batch = data.get("batch", {})
    return TrainConfig(
        learning_rate=float(data["learning_rate"]),
        momentum=float(data.get("momentum", 0.9)),
        clip_limit=data.get("clip_limit"),
        schedule=ScheduleConfig(
            kind=ScheduleKind(schedule.get("kind", ScheduleKind.HALVING.value)),
            warm_epochs=int(schedule.get("warm_epochs", 12)),
            halving_epochs=int(schedule.get("halving_epochs", 12)),
            factor=float(schedule.get("factor", 0.8)),
            patience=int(schedule.get("patience", 3)),
        ),
        batch=BatchConfig(
            unit=BatchUnit(batch.get("unit", BatchUnit.RECORDINGS.value)),
            size=int(batch.get("size", 100)),
        ),
        epochs=int(data.get("epochs", 24)),
        seed=seed,
        select_by=SelectionCriterion(data.get("select_by", SelectionCriterion.LAST.value)),
    )


def _build_synth(data: Dict[str, Any], seed: int) -> SynthConfig:
    values = dict(data)
    for key in ("event_duration", "events_per_bag"):
        if key in values:
            values[key] = tuple(values[key])
    return SynthConfig(**values, seed=seed)


def build_experiment(data: Dict[str, Any], seed: Optional[int] = None, output_dir: Optional[str] = None) -> ExperimentConfig:
    """
    Typed experiment from an already validated document.

    ``seed`` and ``output_dir`` override the file's values; the single seed
    drives data generation, initialization, shuffling, dropout and tuning.
    """
    seed = int(data.get("seed", 0)) if seed is None else int(seed)
    model = data.get("model", {})
    dataset = data["dataset"]
    evaluation = data.get("evaluation", {})
    return ExperimentConfig(
        objective=ObjectiveSpec(
            kind=ObjectiveKind(data["objective"]["kind"]),
            averaging=AveragingConvention(data["objective"]["averaging"]),
        ),
        architecture=ArchitectureConfig(
            conv_layers=tuple(ConvLayerConfig(**layer) for layer in model.get("conv_layers", [])),
            recurrent_sizes=tuple(model.get("recurrent_sizes", [32])),
            dropout=float(model.get("dropout", 0.0)),
        ),
        train=_build_train(data["train"], seed),
        output_dir=output_dir if output_dir is not None else data.get("output_dir", "runs/experiment"),
        seed=seed,
        dataset_path=dataset.get("path"),
        synth=_build_synth(dataset["synth"], seed) if "synth" in dataset else None,
        evaluation=EvaluationConfig(
            segment_length=float(evaluation.get("segment_length", 1.0)),
            threshold_target=ThresholdTarget(evaluation.get("threshold_target", ThresholdTarget.TAGGING.value)),
            oracle=bool(evaluation.get("oracle", True)),
        ),
    )


class ConfigLoader:
    """Loads and validates experiment configurations."""

    def __init__(self, config_dir: PathLike = CONFIG_DIR):
        """
        Initialize configuration loader.

        Args:
            config_dir: Directory holding experiment.schema.json and presets/
        """
        self.config_dir = Path(config_dir)
        with open(self.config_dir / SCHEMA_FILE, "r") as f:
            self.schema = json.load(f)

    def preset_path(self, name: str) -> Path:
        return self.config_dir / PRESET_DIR / f"{name}.json"

    def preset_names(self):
        return sorted(p.stem for p in (self.config_dir / PRESET_DIR).glob("*.json"))

    def resolve(self, path_or_preset: PathLike) -> Path:
        """A file path, or the name of a shipped preset."""
        path = Path(path_or_preset)
        if path.exists():
            return path
        preset = self.preset_path(str(path_or_preset))
        if preset.exists():
            return preset
        raise ConfigError(f"no config file or preset named '{path_or_preset}'")

    def load_document(self, path_or_preset: PathLike) -> Dict[str, Any]:
        """
        Read and validate one experiment file (annotation keys removed).

        Raises:
            ConfigError: On unreadable JSON or schema violations
        """
        path = self.resolve(path_or_preset)
        try:
            with open(path, "r") as f:
                document = strip_annotations(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"{path}: {e}") from e
        try:
            jsonschema.validate(instance=document, schema=self.schema)
        except jsonschema.ValidationError as e:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(f"{path}: {where}: {e.message}") from e
        return document

    def load_experiment(
        self,
        path_or_preset: PathLike,
        seed: Optional[int] = None,
        output_dir: Optional[str] = None,
    ) -> ExperimentConfig:
        """
        Validated, typed experiment.

        Raises:
            ConfigError: On schema violations or values the dataclasses reject
        """
        document = self.load_document(path_or_preset)
        try:
            return build_experiment(document, seed=seed, output_dir=output_dir)
        except (ValueError, TypeError, KeyError) as e:
            raise ConfigError(f"{path_or_preset}: {e}") from e


def load_experiment(path_or_preset: PathLike, seed: Optional[int] = None,
                    output_dir: Optional[str] = None) -> ExperimentConfig:
    return ConfigLoader().load_experiment(path_or_preset, seed=seed, output_dir=output_dir)
