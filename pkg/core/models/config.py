"""
Configuration models.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from hashlib import sha256
from typing import Any, Dict, Optional, Tuple


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class ConfigHash:
    """Configuration fingerprint for reproducibility (no timestamps, so reruns match)."""
    hash_value: str

    @staticmethod
    def compute(config_dict: Dict[str, Any]) -> str:
        """Compute SHA256 hash of config."""
        json_str = json.dumps(_plain(config_dict), sort_keys=True, default=str)
        return sha256(json_str.encode()).hexdigest()

    @classmethod
    def of(cls, config: Any) -> "ConfigHash":
        payload = asdict(config) if hasattr(config, "__dataclass_fields__") else config
        return cls(hash_value=cls.compute(payload))


def to_plain_dict(config: Any) -> Dict[str, Any]:
    """Dataclass -> JSON-ready dict (enums by value, tuples as lists)."""
    return _plain(asdict(config))


# -- networks ---------------------------------------------------------------

class HeadKind(Enum):
    """Per-frame output layer."""
    SIGMOID = "sigmoid"   # C independent probabilities (weak systems)
    SOFTMAX = "softmax"   # C + 1 classes, blank last (CTC)


@dataclass(frozen=True)
class ConvLayerConfig:
    """One convolutional layer: odd kernel width over time, ReLU, then time max-pooling."""
    kernel: int
    channels: int
    pool: int = 1

    def __post_init__(self):
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"conv kernel width must be odd and >= 1, got {self.kernel}")
        if self.channels < 1:
            raise ValueError("conv channels must be >= 1")
        if self.pool < 1:
            raise ValueError("conv pooling factor must be >= 1")


@dataclass(frozen=True)
class ArchitectureConfig:
    """Network shape as written in an experiment file; data-dependent sizes come later."""
    conv_layers: Tuple[ConvLayerConfig, ...] = ()
    recurrent_sizes: Tuple[int, ...] = (32,)
    dropout: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "conv_layers", tuple(self.conv_layers))
        object.__setattr__(self, "recurrent_sizes", tuple(int(s) for s in self.recurrent_sizes))
        if any(s < 1 for s in self.recurrent_sizes):
            raise ValueError("recurrent layer sizes must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")


@dataclass(frozen=True)
class ModelConfig:
    """Instance-level classifier: conv front end, bidirectional recurrent body, per-frame head."""
    input_dim: int
    num_classes: int
    conv_layers: Tuple[ConvLayerConfig, ...] = ()
    recurrent_sizes: Tuple[int, ...] = (32,)
    head: HeadKind = HeadKind.SIGMOID
    dropout: float = 0.0
    input_frame_rate: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "conv_layers", tuple(self.conv_layers))
        object.__setattr__(self, "recurrent_sizes", tuple(int(s) for s in self.recurrent_sizes))
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if any(s < 1 for s in self.recurrent_sizes):
            raise ValueError("recurrent layer sizes must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.input_frame_rate <= 0:
            raise ValueError("input_frame_rate must be > 0")

    @classmethod
    def from_architecture(
        cls,
        architecture: ArchitectureConfig,
        input_dim: int,
        num_classes: int,
        head: HeadKind,
        input_frame_rate: float,
    ) -> "ModelConfig":
        return cls(
            input_dim=input_dim,
            num_classes=num_classes,
            conv_layers=architecture.conv_layers,
            recurrent_sizes=architecture.recurrent_sizes,
            head=head,
            dropout=architecture.dropout,
            input_frame_rate=input_frame_rate,
        )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        """Inverse of ``to_plain_dict`` (checkpoint metadata)."""
        return cls(
            input_dim=int(data["input_dim"]),
            num_classes=int(data["num_classes"]),
            conv_layers=tuple(ConvLayerConfig(**layer) for layer in data.get("conv_layers", ())),
            recurrent_sizes=tuple(data.get("recurrent_sizes", (32,))),
            head=HeadKind(data.get("head", HeadKind.SIGMOID.value)),
            dropout=float(data.get("dropout", 0.0)),
            input_frame_rate=float(data.get("input_frame_rate", 10.0)),
        )

    @property
    def output_dim(self) -> int:
        """C for sigmoid heads, C + 1 (blank included) for softmax heads."""
        return self.num_classes + 1 if self.head == HeadKind.SOFTMAX else self.num_classes

    @property
    def blank_index(self) -> Optional[int]:
        return self.num_classes if self.head == HeadKind.SOFTMAX else None

    @property
    def total_pooling(self) -> int:
        return int(math.prod(layer.pool for layer in self.conv_layers))

    @property
    def output_frame_rate(self) -> float:
        return self.input_frame_rate / self.total_pooling


# -- objectives -------------------------------------------------------------

class ObjectiveKind(Enum):
    """The three systems compared: CTC baseline and the two MIL pooling systems."""
    CTC = "ctc"
    MAX = "max"
    NOISY_OR = "noisy-or"

    @property
    def is_weak(self) -> bool:
        return self != ObjectiveKind.CTC

    @property
    def head(self) -> HeadKind:
        return HeadKind.SOFTMAX if self == ObjectiveKind.CTC else HeadKind.SIGMOID


class AveragingConvention(Enum):
    """Units a loss is averaged over."""
    FRAMES = "frames"
    UTTERANCES_AND_CLASSES = "utterances_and_classes"
    FRAMES_AND_CLASSES = "frames_and_classes"

    @property
    def per_frame(self) -> bool:
        return self in (AveragingConvention.FRAMES, AveragingConvention.FRAMES_AND_CLASSES)

    @property
    def per_class(self) -> bool:
        return self in (AveragingConvention.UTTERANCES_AND_CLASSES, AveragingConvention.FRAMES_AND_CLASSES)

    @property
    def per_utterance(self) -> bool:
        return self == AveragingConvention.UTTERANCES_AND_CLASSES


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: ObjectiveKind
    averaging: AveragingConvention


# -- training ---------------------------------------------------------------

class ScheduleKind(Enum):
    HALVING = "halving"    # constant for warm epochs, then halved every epoch
    PLATEAU = "plateau"    # multiplied by factor after `patience` epochs without improvement


@dataclass(frozen=True)
class ScheduleConfig:
    kind: ScheduleKind = ScheduleKind.HALVING
    warm_epochs: int = 12
    halving_epochs: int = 12
    factor: float = 0.8
    patience: int = 3

    def __post_init__(self):
        if self.warm_epochs < 0 or self.halving_epochs < 0:
            raise ValueError("warm_epochs and halving_epochs must be >= 0")
        if not 0.0 < self.factor < 1.0:
            raise ValueError(f"plateau factor must be in (0, 1), got {self.factor}")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


class BatchUnit(Enum):
    FRAMES = "frames"
    RECORDINGS = "recordings"


@dataclass(frozen=True)
class BatchConfig:
    unit: BatchUnit = BatchUnit.RECORDINGS
    size: int = 100

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("batch size must be >= 1")


class SelectionCriterion(Enum):
    """Which epoch's parameters the trainer returns."""
    LAST = "last"
    VALID_LOSS = "valid_loss"
    VALID_TAGGING_F1 = "valid_tagging_f1"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    momentum: float = 0.9
    clip_limit: Optional[float] = None
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    batch: BatchConfig = field(default_factory=BatchConfig)
    epochs: int = 24
    seed: int = 0
    select_by: SelectionCriterion = SelectionCriterion.LAST

    def __post_init__(self):
        if not self.learning_rate >= 0.0:
            raise ValueError("learning_rate must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.clip_limit is not None and not self.clip_limit > 0.0:
            raise ValueError("clip_limit must be > 0 when present")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if (self.schedule.kind == ScheduleKind.HALVING
                and self.epochs > self.schedule.warm_epochs + self.schedule.halving_epochs):
            raise ValueError(
                f"{self.epochs} epochs exceed warm_epochs + halving_epochs "
                f"({self.schedule.warm_epochs} + {self.schedule.halving_epochs})"
            )


# -- data -------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Synthetic weakly labeled sequence corpus."""
    num_classes: int = 5
    feature_dim: int = 16
    frames_per_bag: int = 100
    frame_rate: float = 10.0
    train_bags: int = 500
    valid_bags: int = 100
    test_bags: int = 100
    event_duration: Tuple[int, int] = (5, 20)
    events_per_bag: Tuple[int, int] = (1, 3)
    noise_std: float = 1.0
    amplitude: float = 2.0
    allow_overlap: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "event_duration", tuple(int(v) for v in self.event_duration))
        object.__setattr__(self, "events_per_bag", tuple(int(v) for v in self.events_per_bag))
        low, high = self.event_duration
        if not 1 <= low <= high <= self.frames_per_bag:
            raise ValueError(f"event_duration {self.event_duration} must lie within [1, {self.frames_per_bag}]")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.feature_dim < self.num_classes:
            raise ValueError("feature_dim must be >= num_classes for orthogonal class signatures")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be > 0")
        first, last = self.events_per_bag
        if not 0 <= first <= last:
            raise ValueError(f"events_per_bag {self.events_per_bag} must satisfy 0 <= min <= max")
        if min(self.train_bags, self.valid_bags, self.test_bags) < 0:
            raise ValueError("bag counts must be >= 0")


# -- experiments ------------------------------------------------------------

class ThresholdTarget(Enum):
    """What the threshold tuner optimizes."""
    TAGGING = "tagging"   # recording-level micro F1 (default protocol)
    SED = "sed"           # segment-level micro F1


@dataclass(frozen=True)
class EvaluationConfig:
    segment_length: float = 1.0
    threshold_target: ThresholdTarget = ThresholdTarget.TAGGING
    oracle: bool = True

    def __post_init__(self):
        if self.segment_length <= 0:
            raise ValueError("segment_length must be > 0")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a system (objective + network + recipe) on one dataset."""
    objective: ObjectiveSpec
    architecture: ArchitectureConfig
    train: TrainConfig
    output_dir: str
    seed: int = 0
    dataset_path: Optional[str] = None
    synth: Optional[SynthConfig] = None
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def __post_init__(self):
        if self.dataset_path is None and self.synth is None:
            raise ValueError("experiment needs either dataset.path or dataset.synth")

    @property
    def fingerprint(self) -> str:
        """Hash of everything but the output directory."""
        payload = to_plain_dict(self)
        payload.pop("output_dir")
        return ConfigHash.compute(payload)
