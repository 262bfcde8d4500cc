"""
Segment-based SED metrics.

The timeline is cut into ceil(duration / L) segments of length L (the last
one may be partial and still counts). A class is active in segment k iff an
interval of that class overlaps [kL, (k+1)L). Per segment, with N reference
actives:

    S = min(FN, FP)    D = max(0, FN - FP)    I = max(0, FP - FN)
    ER = (sum S + sum D + sum I) / sum N * 100

F1 is micro-averaged over all segment-class decisions.
"""

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from core.models.labels import EventInterval

from .counts import DetectionCounts

DEFAULT_SEGMENT_LENGTH = 1.0
# Guards ceil() against durations like 10.000000000000002
_DURATION_EPS = 1e-9


def num_segments(duration: float, segment_length: float = DEFAULT_SEGMENT_LENGTH) -> int:
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if segment_length <= 0:
        raise ValueError(f"segment length must be > 0, got {segment_length}")
    return max(1, int(math.ceil(duration / segment_length - _DURATION_EPS)))


def segment_activity(
    intervals: Iterable[EventInterval],
    duration: float,
    num_classes: int,
    segment_length: float = DEFAULT_SEGMENT_LENGTH,
) -> np.ndarray:
    """(K, C) boolean activity matrix."""
    segments = num_segments(duration, segment_length)
    starts = np.arange(segments) * segment_length
    ends = starts + segment_length
    active = np.zeros((segments, num_classes), dtype=bool)
    for interval in intervals:
        if interval.class_id >= num_classes:
            raise ValueError(f"class {interval.class_id} outside 0..{num_classes - 1}")
        active[:, interval.class_id] |= (interval.onset < ends) & (interval.offset > starts)
    return active


def segment_max_scores(
    frame_probs: np.ndarray,
    frame_rate: float,
    duration: float,
    segment_length: float = DEFAULT_SEGMENT_LENGTH,
) -> np.ndarray:
    """
    (K, C) maximum frame probability per segment.

    Frame t spans [t / rate, (t + 1) / rate) and counts toward every segment it
    overlaps, so thresholding these scores reproduces the activity of the
    intervals decoded from the frames at the same thresholds.
    """
    probs = np.asarray(frame_probs, dtype=np.float64)
    segments = num_segments(duration, segment_length)
    frame_start = np.arange(probs.shape[0]) / frame_rate
    frame_end = np.arange(1, probs.shape[0] + 1) / frame_rate
    scores = np.zeros((segments, probs.shape[1]))
    for k in range(segments):
        inside = (frame_start < (k + 1) * segment_length) & (frame_end > k * segment_length)
        if np.any(inside):
            scores[k] = probs[inside].max(axis=0)
    return scores


@dataclass(frozen=True, eq=False)
class SegmentCounts:
    """Per-segment reference actives and detection counts, summed over classes."""
    n: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    def __post_init__(self):
        for name in ("n", "tp", "fp", "fn"):
            array = np.asarray(getattr(self, name), dtype=np.int64)
            if np.any(array < 0):
                raise ValueError(f"segment count '{name}' must be >= 0")
            object.__setattr__(self, name, array)
        if not np.array_equal(self.tp + self.fn, self.n):
            raise ValueError("TP + FN must equal N in every segment")

    @classmethod
    def from_activity(cls, hyp: np.ndarray, ref: np.ndarray) -> "SegmentCounts":
        if hyp.shape != ref.shape:
            raise ValueError(f"activity shapes differ: {hyp.shape} vs {ref.shape}")
        return cls(
            n=ref.sum(axis=1),
            tp=(hyp & ref).sum(axis=1),
            fp=(hyp & ~ref).sum(axis=1),
            fn=(~hyp & ref).sum(axis=1),
        )

    @classmethod
    def concat(cls, parts: Sequence["SegmentCounts"]) -> "SegmentCounts":
        return cls(
            n=np.concatenate([p.n for p in parts]),
            tp=np.concatenate([p.tp for p in parts]),
            fp=np.concatenate([p.fp for p in parts]),
            fn=np.concatenate([p.fn for p in parts]),
        )

    @property
    def substitutions(self) -> int:
        return int(np.minimum(self.fn, self.fp).sum())

    @property
    def deletions(self) -> int:
        return int(np.maximum(0, self.fn - self.fp).sum())

    @property
    def insertions(self) -> int:
        return int(np.maximum(0, self.fp - self.fn).sum())

    @property
    def reference_total(self) -> int:
        return int(self.n.sum())

    @property
    def detection(self) -> DetectionCounts:
        return DetectionCounts(int(self.tp.sum()), int(self.fp.sum()), int(self.fn.sum()))

    @property
    def error_rate(self) -> float:
        """Percentage; inf when the reference is empty but errors were made, 0 when neither."""
        errors = self.substitutions + self.deletions + self.insertions
        if self.reference_total == 0:
            return 0.0 if errors == 0 else math.inf
        return 100.0 * errors / self.reference_total

    @property
    def f1(self) -> float:
        return self.detection.f1


class SegmentScores(NamedTuple):
    error_rate: float
    f1: float


def segment_counts(
    intervals: Iterable[EventInterval],
    refs: Iterable[EventInterval],
    duration: float,
    num_classes: int,
    segment_length: float = DEFAULT_SEGMENT_LENGTH,
) -> SegmentCounts:
    hyp = segment_activity(intervals, duration, num_classes, segment_length)
    ref = segment_activity(refs, duration, num_classes, segment_length)
    return SegmentCounts.from_activity(hyp, ref)


def segment_metrics(
    intervals: Sequence[EventInterval],
    refs: Sequence[EventInterval],
    duration: float,
    segment_length: float = DEFAULT_SEGMENT_LENGTH,
    num_classes: Optional[int] = None,
) -> SegmentScores:
    """
    (ER, F1) percentages of one recording.

    Raises:
        ValueError: If duration <= 0
    """
    if num_classes is None:
        num_classes = 1 + max([i.class_id for i in list(intervals) + list(refs)], default=0)
    counts = segment_counts(intervals, refs, duration, num_classes, segment_length)
    return SegmentScores(counts.error_rate, counts.f1)
