"""
Bag-level cross-entropy, CTC batch reduction and averaging conventions.

Per class, a present label costs -log y and an absent one -log(1 - y).
Loss logs are floored at ``LOSS_CLAMP``; each floored element is counted in
``LossStats.clamp_count`` and receives no gradient. The noisy-or negative
branch reads the stored log-complement directly and is never floored.

Averaging conventions divide each bag's loss by its frame count T' and/or the
class count C; ``utterances_and_classes`` also averages over the bags of the
batch. A bag's unit not named by the convention is summed.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from core.autodiff import primitives as P
from core.autodiff.numerics import log1m
from core.autodiff.tensor import Tensor
from core.models.bag import Bag
from core.models.config import AveragingConvention, ObjectiveKind
from core.models.labels import LabelKind, WeakLabel
from core.models.predictions import BagPrediction, PoolingKind

from .ctc import ctc_nll
from .pooling import pool_tensor

logger = logging.getLogger(__name__)

LOSS_CLAMP = 1e-12


@dataclass
class LossStats:
    """Counters accumulated while computing losses."""
    clamp_count: int = 0
    bags: int = 0

    def merge(self, other: "LossStats") -> None:
        self.clamp_count += other.clamp_count
        self.bags += other.bags


def pooling_for(objective: ObjectiveKind) -> PoolingKind:
    if objective == ObjectiveKind.MAX:
        return PoolingKind.MAX
    if objective == ObjectiveKind.NOISY_OR:
        return PoolingKind.NOISY_OR
    raise ValueError(f"objective {objective.value} has no pooling function")


def bag_denominator(convention: AveragingConvention, frames: int, num_classes: int) -> float:
    """Per-bag divisor; the utterance average is applied over the batch."""
    denominator = 1.0
    if convention.per_frame:
        denominator *= frames
    if convention.per_class:
        denominator *= num_classes
    return denominator


def bag_bce(
    bag_pred: BagPrediction,
    label: WeakLabel,
    convention: AveragingConvention,
    frames: int,
    stats: Optional[LossStats] = None,
) -> float:
    """
    Cross-entropy of one bag's pooled prediction against its presence labels.

    Args:
        bag_pred: Pooled probabilities with log-complements
        label: Classes present in the bag
        convention: Averaging convention of the experiment
        frames: T' of the bag
        stats: Receives the number of floored loss logs

    Returns:
        Loss divided by the convention's per-bag denominator
    """
    num_classes = bag_pred.classes
    targets = label.as_vector(num_classes).astype(bool)
    values = bag_pred.values

    if bag_pred.pooling == PoolingKind.NOISY_OR:
        positive_logs = np.log(np.maximum(-np.expm1(bag_pred.log_complement), LOSS_CLAMP))
        positive_floored = -np.expm1(bag_pred.log_complement) <= LOSS_CLAMP
        negative_logs = bag_pred.log_complement
        negative_floored = np.zeros(num_classes, dtype=bool)
    else:
        positive_logs = np.log(np.maximum(values, LOSS_CLAMP))
        positive_floored = values <= LOSS_CLAMP
        negative_logs = log1m(values, floor=LOSS_CLAMP)
        negative_floored = (1.0 - values) <= LOSS_CLAMP

    clamped = int(np.sum(positive_floored & targets) + np.sum(negative_floored & ~targets))
    if stats is not None:
        stats.clamp_count += clamped
        stats.bags += 1

    loss = -float(np.sum(np.where(targets, positive_logs, negative_logs)))
    return loss / bag_denominator(convention, frames, num_classes)


def _weak_group_loss(
    probs: Tensor,
    targets: np.ndarray,
    pooling: PoolingKind,
    weights: np.ndarray,
    stats: LossStats,
) -> Tensor:
    pooled = pool_tensor(probs, pooling)
    values = pooled.values
    present = targets.astype(bool)

    if pooling == PoolingKind.NOISY_OR:
        positive_logs = P.log_neg_expm1(pooled.log_complement, floor=LOSS_CLAMP)
        negative_logs = pooled.log_complement
        floored = present & (values.value <= LOSS_CLAMP)
    else:
        positive_logs = P.log(values, floor=LOSS_CLAMP)
        negative_logs = P.log1m(values, floor=LOSS_CLAMP)
        floored = (present & (values.value <= LOSS_CLAMP)) | (~present & (1.0 - values.value <= LOSS_CLAMP))
    stats.clamp_count += int(np.sum(floored))
    stats.bags += int(targets.shape[0])

    log_likelihood = P.add(P.mul_const(positive_logs, targets), P.mul_const(negative_logs, 1.0 - targets))
    return P.sum_all(P.mul_const(log_likelihood, -weights))


def batch_loss(
    objective: ObjectiveKind,
    outputs: Sequence,
    groups: Sequence[Sequence[Bag]],
    convention: AveragingConvention,
    num_classes: int,
    stats: Optional[LossStats] = None,
) -> Tensor:
    """
    Scalar loss of one minibatch.

    Args:
        objective: CTC, max or noisy-or
        outputs: One NetworkOutput per group, each over a stack of equal-length bags
        groups: Bags of each group, in the stacking order of ``outputs``
        convention: Averaging convention
        num_classes: C (event classes, blank excluded)
        stats: Receives clamp and bag counters

    Returns:
        Scalar tensor, groups summed in the given order

    Raises:
        MissingLabelError: If a bag lacks the labels the objective needs
    """
    stats = stats if stats is not None else LossStats()
    total_bags = sum(len(group) for group in groups)
    utterance_share = 1.0 / total_bags if convention.per_utterance else 1.0

    terms: List[Tensor] = []
    for output, group in zip(outputs, groups):
        frames = output.probabilities.shape[-2]
        weight = utterance_share / bag_denominator(convention, frames, num_classes)

        if objective == ObjectiveKind.CTC:
            labels = [bag.require(LabelKind.SEQUENTIAL) for bag in group]
            nll = ctc_nll(output.log_probabilities, labels, blank=num_classes)
            stats.bags += len(group)
            terms.append(P.sum_all(P.scale(nll, weight)))
        else:
            targets = np.stack([bag.require(LabelKind.WEAK).as_vector(num_classes) for bag in group])
            weights = np.full(targets.shape, weight)
            terms.append(_weak_group_loss(output.probabilities, targets, pooling_for(objective), weights, stats))

    logger.debug("batch_loss_computed", extra={
        "objective": objective.value, "groups": len(groups), "bags": total_bags,
    })
    return P.add_all(terms)
