"""Decoders: token sequences for phone-style tasks, event intervals for SED-style tasks."""

from .best_path import WEAK_BLANK_THRESHOLD, best_path_decode_ctc, best_path_decode_weak, collapse
from .intervals import frame_runs, intervals_from_frames
from .label_io import read_intervals, read_sequences, read_tags, write_intervals, write_sequences, write_tags

__all__ = [
    'WEAK_BLANK_THRESHOLD',
    'best_path_decode_ctc',
    'best_path_decode_weak',
    'collapse',
    'frame_runs',
    'intervals_from_frames',
    'read_intervals',
    'read_sequences',
    'read_tags',
    'write_intervals',
    'write_sequences',
    'write_tags',
]
