"""
Iterative class-specific threshold tuning.

Phase 1 picks, for each class on its own, the threshold maximizing that
class's F1. Phase 2 visits the classes in seeded random order and re-tunes one
threshold at a time for the best micro F1 with the others held fixed; a change
is kept only when micro F1 strictly improves. Tuning stops after a complete
pass over all classes without a change.

Candidate thresholds for a class are the midpoints between consecutive sorted
unique scores plus the sentinels 0 and 1; since decisions (score >= threshold)
only change at score values, this finite set attains the optimum over all real
thresholds. Ties between candidates go to the highest threshold.

A class whose scores are all equal to v gets (v + 1) / 2 (1.0 when v = 1)
and is left out of the search.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from core.models.predictions import ThresholdVector

from .counts import count_decisions

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TuningResult:
    thresholds: ThresholdVector
    phase1_f1: float
    final_f1: float
    accepted_steps: int
    passes: int


def candidate_thresholds(scores: np.ndarray) -> np.ndarray:
    """Sorted candidate thresholds for one class."""
    unique = np.unique(scores)
    midpoints = (unique[:-1] + unique[1:]) / 2.0
    return np.unique(np.concatenate([[0.0], midpoints, [1.0]]))


def degenerate_threshold(value: float) -> float:
    return 1.0 if value >= 1.0 else (value + 1.0) / 2.0


def _class_counts(scores: np.ndarray, truth: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """(K, 3) TP/FP/FN of one class at every candidate threshold."""
    decisions = scores[None, :] >= candidates[:, None]
    tp = np.sum(decisions & truth[None, :], axis=1)
    fp = np.sum(decisions & ~truth[None, :], axis=1)
    fn = np.sum(~decisions & truth[None, :], axis=1)
    return np.stack([tp, fp, fn], axis=1)


def _f1(counts: np.ndarray) -> np.ndarray:
    """F1 percentage of each (tp, fp, fn) row; 0 where undefined."""
    tp, fp, fn = counts[..., 0], counts[..., 1], counts[..., 2]
    denominator = 2 * tp + fp + fn
    return np.divide(200.0 * tp, denominator, out=np.zeros(denominator.shape), where=denominator > 0)


def _best_index(values: np.ndarray) -> int:
    """Last index attaining the maximum (highest threshold on ties)."""
    best = np.max(values)
    return int(np.flatnonzero(values == best)[-1])


def tune_thresholds(scores: np.ndarray, refs: np.ndarray, seed: int = 0) -> TuningResult:
    """
    Tune one threshold per class for micro F1.

    Args:
        scores: (N, C) recording-level (or segment-level) scores in [0, 1]
        refs: (N, C) boolean reference activity
        seed: Seed of the Phase 2 visiting order

    Returns:
        TuningResult with the thresholds and the micro F1 after each phase

    Raises:
        ValueError: If shapes disagree or there is no positive reference
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(refs, dtype=bool)
    if scores.ndim != 2 or scores.shape != truth.shape:
        raise ValueError(f"scores {scores.shape} and references {truth.shape} must be equal (N, C) arrays")
    if not truth.any():
        raise ValueError("threshold tuning needs at least one positive reference")
    num_classes = scores.shape[1]

    candidates: List[Optional[np.ndarray]] = []
    table: List[Optional[np.ndarray]] = []
    thresholds = np.zeros(num_classes)
    chosen = np.zeros((num_classes, 3), dtype=np.int64)

    # Phase 1: class-wise F1
    for c in range(num_classes):
        column = scores[:, c]
        if np.all(column == column[0]):
            thresholds[c] = degenerate_threshold(float(column[0]))
            chosen[c] = _class_counts(column, truth[:, c], np.array([thresholds[c]]))[0]
            candidates.append(None)
            table.append(None)
            continue
        cands = candidate_thresholds(column)
        counts = _class_counts(column, truth[:, c], cands)
        best = _best_index(_f1(counts))
        thresholds[c] = cands[best]
        chosen[c] = counts[best]
        candidates.append(cands)
        table.append(counts)

    phase1_f1 = float(_f1(chosen.sum(axis=0)))
    current_f1 = phase1_f1

    # Phase 2: micro F1, one class at a time
    rng = np.random.default_rng(seed)
    searchable = [c for c in range(num_classes) if candidates[c] is not None]
    accepted = 0
    passes = 0
    while searchable:
        passes += 1
        changed = False
        for c in rng.permutation(searchable):
            others = chosen.sum(axis=0) - chosen[c]
            micro = _f1(table[c] + others[None, :])
            best = _best_index(micro)
            if micro[best] > current_f1:
                thresholds[c] = candidates[c][best]
                chosen[c] = table[c][best]
                current_f1 = float(micro[best])
                accepted += 1
                changed = True
        if not changed:
            break

    result = TuningResult(
        thresholds=ThresholdVector(tuple(float(t) for t in thresholds)),
        phase1_f1=phase1_f1,
        final_f1=current_f1,
        accepted_steps=accepted,
        passes=passes,
    )
    logger.info("thresholds_tuned", extra={
        "classes": num_classes,
        "phase1_f1": phase1_f1,
        "final_f1": current_f1,
        "accepted_steps": accepted,
        "passes": passes,
    })
    return result


def micro_f1(scores: np.ndarray, refs: np.ndarray, thresholds: ThresholdVector) -> float:
    decisions = np.asarray(scores) >= thresholds.as_array()[None, :]
    return count_decisions(decisions, refs).f1
