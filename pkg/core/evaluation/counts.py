"""Pooled detection counts and the scores derived from them."""

from typing import NamedTuple

import numpy as np


class DetectionCounts(NamedTuple):
    """True positives, false positives and false negatives pooled over decisions."""
    tp: int
    fp: int
    fn: int

    def __add__(self, other: "DetectionCounts") -> "DetectionCounts":
        return DetectionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def f1(self) -> float:
        """Percentage; 0 when there is nothing to score."""
        denominator = 2 * self.tp + self.fp + self.fn
        return 200.0 * self.tp / denominator if denominator else 0.0

    @property
    def precision(self) -> float:
        predicted = self.tp + self.fp
        return 100.0 * self.tp / predicted if predicted else 0.0

    @property
    def recall(self) -> float:
        actual = self.tp + self.fn
        return 100.0 * self.tp / actual if actual else 0.0


def count_decisions(decisions: np.ndarray, truth: np.ndarray) -> DetectionCounts:
    """Pool counts over two equally shaped boolean arrays."""
    decisions = np.asarray(decisions, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if decisions.shape != truth.shape:
        raise ValueError(f"decision shape {decisions.shape} differs from reference {truth.shape}")
    return DetectionCounts(
        tp=int(np.sum(decisions & truth)),
        fp=int(np.sum(decisions & ~truth)),
        fn=int(np.sum(~decisions & truth)),
    )
