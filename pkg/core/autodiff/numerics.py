"""Shared numeric helpers for primitives."""

import numpy as np

# Floor applied to arguments of log unless a caller supplies its own.
LOG_FLOOR = 1e-300


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def logsumexp(x: np.ndarray, axis: int = -1, keepdims: bool = False) -> np.ndarray:
    peak = np.max(x, axis=axis, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    total = np.log(np.sum(np.exp(x - peak), axis=axis, keepdims=True)) + peak
    return total if keepdims else np.squeeze(total, axis=axis)


def log1m(x: np.ndarray, floor: float = LOG_FLOOR) -> np.ndarray:
    """log(1 - x), accurate for small x, floored at log(floor)."""
    x = np.asarray(x, dtype=np.float64)
    complement = 1.0 - x
    safe = np.where(complement > floor, x, 0.0)
    return np.where(complement > floor, np.log1p(-safe), np.log(floor))
