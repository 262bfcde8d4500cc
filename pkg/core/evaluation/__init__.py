"""Metrics and threshold tuning."""

from .counts import DetectionCounts, count_decisions
from .edit_distance import EditCounts, edit_distance, per_corpus
from .localization import localization_statistic, peak_frame_probabilities
from .report import MetricRow, MetricsReport
from .segments import (
    DEFAULT_SEGMENT_LENGTH,
    SegmentCounts,
    SegmentScores,
    num_segments,
    segment_activity,
    segment_counts,
    segment_max_scores,
    segment_metrics,
)
from .tagging import apply_thresholds, reference_matrix, score_matrix, tagging_counts, tagging_f1
from .thresholds import TuningResult, candidate_thresholds, micro_f1, tune_thresholds

__all__ = [
    'DEFAULT_SEGMENT_LENGTH',
    'DetectionCounts',
    'EditCounts',
    'MetricRow',
    'MetricsReport',
    'SegmentCounts',
    'SegmentScores',
    'TuningResult',
    'apply_thresholds',
    'candidate_thresholds',
    'count_decisions',
    'edit_distance',
    'localization_statistic',
    'micro_f1',
    'num_segments',
    'peak_frame_probabilities',
    'per_corpus',
    'reference_matrix',
    'score_matrix',
    'segment_activity',
    'segment_counts',
    'segment_max_scores',
    'segment_metrics',
    'tagging_counts',
    'tagging_f1',
    'tune_thresholds',
]
