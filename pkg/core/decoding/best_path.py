"""
Best-path decoding of frame probabilities into token sequences.

CTC heads: per-frame argmax over C + 1 columns, then collapse repeats, then
drop blanks. Sigmoid heads: a frame whose most probable class is below 0.5
becomes blank first, then the same collapse and strip. Argmax ties go to the
lowest class id.
"""

from typing import Iterable

import numpy as np

from core.models.labels import TokenSequence

WEAK_BLANK_THRESHOLD = 0.5
_BLANK = -1


def collapse(tokens: Iterable[int]) -> TokenSequence:
    """Merge runs of identical consecutive tokens."""
    result = []
    for token in tokens:
        token = int(token)
        if not result or result[-1] != token:
            result.append(token)
    return tuple(result)


def _strip(tokens: TokenSequence, blank: int) -> TokenSequence:
    return tuple(t for t in tokens if t != blank)


def best_path_decode_ctc(probs: np.ndarray, blank: int = None) -> TokenSequence:
    """Decode (T', C + 1) softmax rows; blank defaults to the last column."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ValueError(f"expected (T', C + 1) probabilities, got shape {probs.shape}")
    blank = probs.shape[1] - 1 if blank is None else blank
    return _strip(collapse(np.argmax(probs, axis=1)), blank)


def best_path_decode_weak(probs: np.ndarray, threshold: float = WEAK_BLANK_THRESHOLD) -> TokenSequence:
    """Decode (T', C) sigmoid rows, blanking frames whose best class is below ``threshold``."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ValueError(f"expected (T', C) probabilities, got shape {probs.shape}")
    if probs.shape[0] == 0:
        return ()
    best = np.argmax(probs, axis=1)
    peak = probs[np.arange(probs.shape[0]), best]
    frames = np.where(peak >= threshold, best, _BLANK)
    return _strip(collapse(frames), _BLANK)
