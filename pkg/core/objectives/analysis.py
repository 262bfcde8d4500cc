"""
Closed-form false-alarm / miss analysis of the two pooling functions.

Each case pools a hand-made frame probability curve for a single class and
evaluates the summed (unaveraged) bag loss, showing why noisy-or is lenient
on misses and harsh on false alarms while max pooling is the reverse.
"""

from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd

from core.models.config import AveragingConvention
from core.models.labels import WeakLabel
from core.models.predictions import PoolingKind

from .bag_loss import LossStats, bag_bce
from .pooling import bag_prediction

ANALYSIS_COLUMNS = [
    "case", "pooling", "label", "frames", "frame_probability",
    "bag_probability", "bag_complement", "loss", "clamped",
]


@dataclass(frozen=True)
class LossCase:
    name: str
    pooling: PoolingKind
    present: bool
    frame_probs: np.ndarray


def _flat(value: float, frames: int) -> np.ndarray:
    return np.full(frames, value)


def _peak(value: float, frames: int, at: int) -> np.ndarray:
    curve = np.zeros(frames)
    curve[at] = value
    return curve


def default_cases() -> List[LossCase]:
    return [
        LossCase("noisy_or_miss_low", PoolingKind.NOISY_OR, True, _flat(0.02, 130)),
        LossCase("noisy_or_miss_moderate", PoolingKind.NOISY_OR, True, _flat(0.2, 130)),
        LossCase("max_false_alarm_peak", PoolingKind.MAX, False, _peak(1.0 - 2e-7, 130, 65)),
        LossCase("noisy_or_false_alarm_short", PoolingKind.NOISY_OR, False, _flat(0.999, 7)),
    ]


def analyze_case(case: LossCase) -> dict:
    prediction = bag_prediction(case.frame_probs[:, None], case.pooling)
    label = WeakLabel(frozenset({0}) if case.present else frozenset())
    stats = LossStats()
    # One class and no frame average: the bag's loss as summed over its terms.
    loss = bag_bce(prediction, label, AveragingConvention.UTTERANCES_AND_CLASSES, len(case.frame_probs), stats)
    return {
        "case": case.name,
        "pooling": case.pooling.value,
        "label": "present" if case.present else "absent",
        "frames": int(len(case.frame_probs)),
        "frame_probability": float(case.frame_probs.max()),
        "bag_probability": float(prediction.values[0]),
        "bag_complement": float(prediction.complement[0]),
        "loss": float(loss),
        "clamped": stats.clamp_count,
    }


def loss_analysis(cases: List[LossCase] = None) -> pd.DataFrame:
    """One row per case, in ``ANALYSIS_COLUMNS`` order."""
    rows = [analyze_case(case) for case in (cases or default_cases())]
    return pd.DataFrame(rows, columns=ANALYSIS_COLUMNS)
