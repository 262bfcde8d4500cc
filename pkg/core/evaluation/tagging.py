"""Recording-level (audio tagging) scores, micro-averaged over all classes."""

from typing import Sequence, Union

import numpy as np

from core.models.labels import WeakLabel
from core.models.predictions import BagPrediction, ThresholdVector

from .counts import DetectionCounts, count_decisions

Scores = Union[np.ndarray, Sequence[BagPrediction]]


def score_matrix(preds: Scores) -> np.ndarray:
    """(N, C) matrix from bag predictions or an existing matrix."""
    if isinstance(preds, np.ndarray):
        matrix = np.asarray(preds, dtype=np.float64)
    else:
        matrix = np.vstack([p.values for p in preds]) if len(preds) else np.zeros((0, 0))
    if matrix.ndim != 2:
        raise ValueError(f"expected (recordings, classes) scores, got shape {matrix.shape}")
    return matrix


def reference_matrix(refs: Sequence[WeakLabel], num_classes: int) -> np.ndarray:
    if not refs:
        return np.zeros((0, num_classes), dtype=bool)
    return np.vstack([label.as_vector(num_classes) for label in refs]).astype(bool)


def apply_thresholds(scores: np.ndarray, thresholds: ThresholdVector) -> np.ndarray:
    """Inclusive decisions: positive iff score >= threshold."""
    if scores.shape[1] != len(thresholds):
        raise ValueError(f"{len(thresholds)} thresholds for {scores.shape[1]} classes")
    return scores >= thresholds.as_array()[None, :]


def tagging_counts(preds: Scores, thresholds: ThresholdVector, refs: Sequence[WeakLabel]) -> DetectionCounts:
    scores = score_matrix(preds)
    if scores.shape[0] != len(refs):
        raise ValueError(f"{scores.shape[0]} predictions for {len(refs)} references")
    return count_decisions(apply_thresholds(scores, thresholds), reference_matrix(refs, len(thresholds)))


def tagging_f1(preds: Scores, thresholds: ThresholdVector, refs: Sequence[WeakLabel]) -> float:
    """Micro F1 percentage over all (recording, class) pairs."""
    return tagging_counts(preds, thresholds, refs).f1
