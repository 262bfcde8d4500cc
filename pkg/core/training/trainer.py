"""
Training loop: minibatch SGD with Nesterov momentum over bags.

Per batch, the gradient is taken at the lookahead point theta + mu * v,
optionally clipped element-wise, and applied with ``sgd_nesterov_step``.
After each epoch the validation loss (dropout off) drives the learning-rate
schedule, and the epoch's parameters are kept if they are the best so far
under the selection criterion.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.autodiff.errors import NonFiniteError
from core.autodiff.tensor import Tape
from core.models.bag import Bag, Dataset
from core.models.config import ObjectiveKind, ObjectiveSpec, SelectionCriterion, TrainConfig
from core.models.labels import LabelKind
from core.networks.network import SequenceNetwork
from core.objectives.bag_loss import LossStats, batch_loss, pooling_for
from core.objectives.pooling import bag_prediction
from core.evaluation.tagging import reference_matrix
from core.evaluation.thresholds import tune_thresholds
from core.utils.seeding import derive_rng

from .batching import Batch, group_by_length, make_batches
from .epoch_log import EpochRecord
from .errors import DivergenceError
from .optimizer import clip_gradients, lookahead, sgd_nesterov_step
from .schedule import schedule_update
from .state import TrainState

logger = logging.getLogger(__name__)

EpochCallback = Callable[[EpochRecord], None]


@dataclass
class TrainResult:
    network: SequenceNetwork
    records: List[EpochRecord]
    best_epoch: int
    state: TrainState
    last_network: Optional[SequenceNetwork] = None


def required_label(objective: ObjectiveKind) -> LabelKind:
    return LabelKind.SEQUENTIAL if objective == ObjectiveKind.CTC else LabelKind.WEAK


def _forward_groups(network: SequenceNetwork, bags: Sequence[Bag], leaves=None, training=False, rng=None):
    groups = group_by_length(bags)
    outputs = [
        network.forward_tensor(np.stack([bag.features for bag in group]), leaves, training=training, rng=rng)
        for group in groups
    ]
    return outputs, groups


def evaluate_loss(
    network: SequenceNetwork,
    bags: Sequence[Bag],
    objective: ObjectiveSpec,
    config: TrainConfig,
    num_classes: int,
    stats: Optional[LossStats] = None,
) -> float:
    """Mean batch loss with dropout off, batches in stored order."""
    losses = []
    for batch in make_batches(bags, config.batch):
        outputs, groups = _forward_groups(network, batch.bags)
        loss = batch_loss(objective.kind, outputs, groups, objective.averaging, num_classes, stats)
        losses.append(loss.item())
    return float(np.mean(losses)) if losses else math.nan


def validation_tagging_f1(network: SequenceNetwork, bags: Sequence[Bag], objective: ObjectiveKind,
                          num_classes: int, seed: int) -> float:
    """Micro F1 on ``bags`` with thresholds tuned on the same bags."""
    predictions = network.predict_bags(bags)
    pooling = pooling_for(objective)
    scores = np.vstack([bag_prediction(p.values, pooling).values for p in predictions])
    refs = reference_matrix([bag.require(LabelKind.WEAK) for bag in bags], num_classes)
    if not refs.any():
        return 0.0
    return tune_thresholds(scores, refs, seed=seed).final_f1


def _train_batch(
    network: SequenceNetwork,
    params: Dict[str, np.ndarray],
    state: TrainState,
    batch: Batch,
    objective: ObjectiveSpec,
    config: TrainConfig,
    num_classes: int,
    dropout_rng: np.random.Generator,
    stats: LossStats,
) -> Tuple[float, Dict[str, np.ndarray]]:
    ahead = network.with_parameters(lookahead(params, state.velocity, config.momentum))
    leaves = ahead.tensors()
    try:
        with Tape() as tape:
            outputs, groups = _forward_groups(ahead, batch.bags, leaves, training=True, rng=dropout_rng)
            loss = batch_loss(objective.kind, outputs, groups, objective.averaging, num_classes, stats)
        value = loss.item()
        grads = tape.backward(loss, leaves)
    except NonFiniteError as exc:
        raise DivergenceError(state.epoch, batch.batch_id, str(exc)) from exc

    if not math.isfinite(value):
        raise DivergenceError(state.epoch, batch.batch_id, "non-finite loss", value)
    if config.clip_limit is not None:
        grads, clipped = clip_gradients(grads, config.clip_limit)
        state.clip_count += clipped
    try:
        new_params, state.velocity = sgd_nesterov_step(
            params, state.velocity, grads, state.learning_rate, config.momentum
        )
    except FloatingPointError as exc:
        raise DivergenceError(state.epoch, batch.batch_id, str(exc)) from exc
    return value, new_params


def train(
    network: SequenceNetwork,
    dataset: Dataset,
    objective: ObjectiveSpec,
    config: TrainConfig,
    on_epoch: Optional[EpochCallback] = None,
) -> TrainResult:
    """
    Train ``network`` on the dataset's train split.

    Args:
        network: Initial model
        dataset: Bags with the labels the objective needs
        objective: Objective kind and averaging convention
        config: Optimizer, schedule, batching and selection settings
        on_epoch: Called with each epoch's record as soon as it is complete

    Returns:
        TrainResult with the selected parameters and one record per epoch

    Raises:
        MissingLabelError: If a train or valid bag lacks the objective's labels
        DivergenceError: If a batch loss or gradient becomes non-finite
    """
    if not dataset.train:
        raise ValueError("training split is empty")
    label_kind = required_label(objective.kind)
    dataset.require(label_kind, ("train", "valid"))
    if objective.kind == ObjectiveKind.CTC and config.select_by == SelectionCriterion.VALID_TAGGING_F1:
        raise ValueError("valid_tagging_f1 selection needs a weak objective")

    num_classes = dataset.num_classes
    shuffle_rng = derive_rng(config.seed, "shuffle")
    dropout_rng = derive_rng(config.seed, "dropout")

    params = {name: np.array(value) for name, value in network.parameters.items()}
    state = TrainState.start(config.learning_rate, params)
    records: List[EpochRecord] = []
    best_score = -math.inf
    best_epoch = 0
    best_params = params

    logger.info("training_started", extra={
        "objective": objective.kind.value,
        "averaging": objective.averaging.value,
        "train_bags": len(dataset.train),
        "valid_bags": len(dataset.valid),
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
    })

    for epoch in range(1, config.epochs + 1):
        state.epoch = epoch
        state.reset_counters()
        stats = LossStats()
        batch_losses = []
        for batch in make_batches(dataset.train, config.batch, shuffle_rng):
            value, params = _train_batch(
                network, params, state, batch, objective, config, num_classes, dropout_rng, stats
            )
            batch_losses.append(value)
        state.clamp_count = stats.clamp_count
        train_loss = float(np.mean(batch_losses))

        current = network.with_parameters(params)
        valid_loss = evaluate_loss(current, dataset.valid, objective, config, num_classes) if dataset.valid else None
        if valid_loss is not None and not math.isfinite(valid_loss):
            raise DivergenceError(epoch, -1, "non-finite validation loss", valid_loss)

        record = EpochRecord(
            epoch=epoch,
            lr=state.learning_rate,
            train_loss=train_loss,
            valid_loss=valid_loss,
            clip_count=state.clip_count,
            clamp_count=state.clamp_count,
        )
        records.append(record)

        if config.select_by == SelectionCriterion.LAST:
            score = float(epoch)
        elif config.select_by == SelectionCriterion.VALID_LOSS:
            score = -(valid_loss if valid_loss is not None else train_loss)
        else:
            score = validation_tagging_f1(current, dataset.valid or dataset.train, objective.kind,
                                          num_classes, config.seed)
        if score > best_score:
            best_score, best_epoch, best_params = score, epoch, params

        logger.info("epoch_completed", extra={
            "epoch": epoch,
            "lr": state.learning_rate,
            "train_loss": train_loss,
            "valid_loss": valid_loss,
            "clip_count": state.clip_count,
            "clamp_count": state.clamp_count,
            "selection_score": score,
        })
        if on_epoch is not None:
            on_epoch(record)

        state.epoch = epoch + 1
        schedule_update(state, config.schedule, valid_loss if valid_loss is not None else train_loss)

    logger.info("training_completed", extra={"best_epoch": best_epoch, "select_by": config.select_by.value})
    return TrainResult(
        network=network.with_parameters(best_params),
        records=records,
        best_epoch=best_epoch,
        state=state,
        last_network=network.with_parameters(params),
    )
