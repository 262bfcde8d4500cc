"""
Prediction models: frame-level probabilities, pooled bag probabilities and
decision thresholds.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Tuple

import numpy as np

from .config import HeadKind

# Tolerance on value ranges and softmax row sums.
PROBABILITY_TOLERANCE = 1e-9


def _readonly(values, ndim: int, label: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    if array.ndim != ndim:
        raise ValueError(f"{label} must be {ndim}-D, got shape {array.shape}")
    array.setflags(write=False)
    return array


class PoolingKind(Enum):
    MAX = "max"
    NOISY_OR = "noisy-or"


@dataclass(frozen=True, eq=False)
class FramePredictions:
    """
    Per-frame, per-class probabilities after time downsampling.

    ``values`` is (T', C) for sigmoid heads and (T', C + 1) for softmax heads,
    blank in the last column.
    """
    values: np.ndarray
    frame_rate: float
    head: HeadKind = HeadKind.SIGMOID
    recording_id: Optional[str] = None

    def __post_init__(self):
        values = _readonly(self.values, 2, "frame predictions")
        object.__setattr__(self, "values", values)
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be > 0")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("frame probabilities must lie in [0, 1]")
        if self.head == HeadKind.SOFTMAX and values.size:
            worst = float(np.max(np.abs(values.sum(axis=1) - 1.0)))
            if worst > PROBABILITY_TOLERANCE:
                raise ValueError(f"softmax rows must sum to 1 (max deviation {worst:.3e})")

    @property
    def frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def classes(self) -> int:
        return int(self.values.shape[1])

    @property
    def duration(self) -> float:
        return self.frames / self.frame_rate

    def frame_times(self) -> np.ndarray:
        """Start time of each frame in seconds."""
        return np.arange(self.frames) / self.frame_rate

    def class_probabilities(self) -> np.ndarray:
        """(T', C) event-class columns, blank dropped for softmax heads."""
        return self.values[:, :-1] if self.head == HeadKind.SOFTMAX else self.values


@dataclass(frozen=True, eq=False)
class BagPrediction:
    """
    Bag-level probabilities with their log-complements.

    ``log_complement`` holds log(1 - y) per class; noisy-or keeps it exact even
    where 1 - y rounds to zero in ``values``.
    """
    values: np.ndarray
    log_complement: np.ndarray
    pooling: PoolingKind

    def __post_init__(self):
        values = _readonly(self.values, 1, "bag values")
        log_complement = _readonly(self.log_complement, 1, "bag log-complement")
        if values.shape != log_complement.shape:
            raise ValueError(f"values {values.shape} and log-complement {log_complement.shape} differ")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("bag probabilities must lie in [0, 1]")
        if np.any(log_complement > 0.0):
            raise ValueError("log-complement must be <= 0")
        with np.errstate(over="ignore"):
            drift = np.abs(np.exp(log_complement) + values - 1.0)
        if values.size and float(drift.max()) > PROBABILITY_TOLERANCE:
            raise ValueError("exp(log_complement) + value must equal 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "log_complement", log_complement)

    @property
    def classes(self) -> int:
        return int(self.values.shape[0])

    @property
    def complement(self) -> np.ndarray:
        return np.exp(self.log_complement)


@dataclass(frozen=True)
class ThresholdVector:
    """Per-class decision thresholds in [0, 1]."""
    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("threshold vector must not be empty")
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"threshold {v} outside [0, 1]")
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, num_classes: int, value: float = 0.5) -> "ThresholdVector":
        return cls(tuple([value] * num_classes))

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, class_id: int) -> float:
        return self.values[class_id]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def replace(self, class_id: int, value: float) -> "ThresholdVector":
        values = list(self.values)
        values[class_id] = value
        return ThresholdVector(tuple(values))


def stack_values(predictions: Iterable[BagPrediction]) -> np.ndarray:
    """(N, C) matrix of bag probabilities, one row per recording."""
    rows = [p.values for p in predictions]
    return np.vstack(rows) if rows else np.zeros((0, 0))
