"""How strongly a system commits to frames inside the classes it tags."""

from typing import Sequence

import numpy as np

from core.models.labels import WeakLabel
from core.models.predictions import FramePredictions


def peak_frame_probabilities(frames: Sequence[FramePredictions], refs: Sequence[WeakLabel]) -> np.ndarray:
    """Largest frame probability of every present (bag, class) pair, in bag then class order."""
    if len(frames) != len(refs):
        raise ValueError(f"{len(frames)} predictions for {len(refs)} references")
    peaks = []
    for prediction, label in zip(frames, refs):
        probs = prediction.class_probabilities()
        for class_id in label.sorted_classes():
            peaks.append(float(probs[:, class_id].max()))
    return np.array(peaks)


def localization_statistic(frames: Sequence[FramePredictions], refs: Sequence[WeakLabel]) -> float:
    """Median peak frame probability over positive (bag, class) pairs; NaN without positives."""
    peaks = peak_frame_probabilities(frames, refs)
    return float(np.median(peaks)) if peaks.size else float("nan")
