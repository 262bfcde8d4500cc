"""
Pooling functions mapping frame probabilities to bag probabilities.

    max:      y = max_i y_i
    noisy-or: log(1 - y) = sum_i log(1 - y_i),  y = 1 - exp(log(1 - y))

Noisy-or is carried in log-complement form so that 1 - y stays exact when it
falls below float64 resolution around 1.0 (130 frames at 0.2 give 2.5e-13).
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from core.autodiff import primitives as P
from core.autodiff.numerics import LOG_FLOOR, log1m
from core.autodiff.tensor import Tensor, TensorLike, as_tensor
from core.models.predictions import BagPrediction, PoolingKind

from .errors import EmptyBagError


class PooledValue(NamedTuple):
    value: float
    log_complement: float


def _frame_vector(frame_probs) -> np.ndarray:
    probs = np.asarray(frame_probs, dtype=np.float64)
    if probs.ndim != 1:
        raise ValueError(f"expected a vector of frame probabilities, got shape {probs.shape}")
    if probs.size == 0:
        raise EmptyBagError("cannot pool an empty bag")
    if probs.min() < 0.0 or probs.max() > 1.0:
        raise ValueError("frame probabilities must lie in [0, 1]")
    return probs


def pool_max(frame_probs) -> float:
    """Largest frame probability of one class."""
    return float(np.max(_frame_vector(frame_probs)))


def pool_noisy_or(frame_probs) -> PooledValue:
    """Probability that at least one frame is positive, with its exact log-complement."""
    probs = _frame_vector(frame_probs)
    log_complement = float(np.sum(log1m(probs)))
    return PooledValue(value=float(-np.expm1(log_complement)), log_complement=log_complement)


def bag_prediction(frame_probs, pooling: PoolingKind) -> BagPrediction:
    """Pool every column of a (T', C) probability matrix."""
    probs = np.asarray(frame_probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ValueError(f"expected (T', C) frame probabilities, got shape {probs.shape}")
    if probs.shape[0] == 0:
        raise EmptyBagError("cannot pool an empty bag")
    if pooling == PoolingKind.MAX:
        values = probs.max(axis=0)
        return BagPrediction(values, log1m(values), pooling)
    log_complement = np.sum(log1m(probs), axis=0)
    return BagPrediction(-np.expm1(log_complement), log_complement, pooling)


@dataclass(frozen=True)
class PooledTensor:
    """Differentiable pooled values; ``log_complement`` is set for noisy-or only."""
    values: Tensor
    log_complement: Optional[Tensor]
    pooling: PoolingKind


def pool_tensor(probs: TensorLike, pooling: PoolingKind) -> PooledTensor:
    """
    Pool a (T', C) or (B, T', C) probability tensor over time.

    Max pooling sends the gradient to the first argmax frame; noisy-or
    reaches every frame with y_i < 1.
    """
    probs = as_tensor(probs)
    if probs.ndim < 2 or probs.shape[-2] == 0:
        raise EmptyBagError(f"cannot pool probabilities of shape {probs.shape}")
    if pooling == PoolingKind.MAX:
        return PooledTensor(P.max_over_time(probs), None, pooling)
    log_complement = P.sum_over_time(P.log1m(probs, floor=LOG_FLOOR))
    return PooledTensor(P.neg_expm1(log_complement), log_complement, pooling)
