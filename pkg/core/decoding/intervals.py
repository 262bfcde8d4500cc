"""Event intervals from thresholded frame probabilities (no smoothing)."""

from typing import List

import numpy as np

from core.models.labels import EventInterval
from core.models.predictions import ThresholdVector


def frame_runs(active: np.ndarray):
    """(start, stop) of each maximal run of True values, stop exclusive."""
    padded = np.concatenate([[False], np.asarray(active, dtype=bool), [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def intervals_from_frames(probs: np.ndarray, thresholds: ThresholdVector, frame_rate: float) -> List[EventInterval]:
    """
    Maximal runs of frames with probability >= the class threshold.

    A run over frames [s, e) becomes [s / rate, e / rate). Intervals are
    returned class by class, each class in time order.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] != len(thresholds):
        raise ValueError(f"probabilities {probs.shape} do not match {len(thresholds)} thresholds")
    if frame_rate <= 0:
        raise ValueError("frame_rate must be > 0")
    intervals = []
    for class_id in range(probs.shape[1]):
        for start, stop in frame_runs(probs[:, class_id] >= thresholds[class_id]):
            intervals.append(EventInterval(onset=start / frame_rate, offset=stop / frame_rate, class_id=class_id))
    return intervals
