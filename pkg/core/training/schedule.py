"""
Learning-rate schedules.

halving: constant for ``warm_epochs``, then halved every epoch:
    lr(epoch) = initial * 2 ** -max(0, epoch - warm_epochs)
plateau: multiplied by ``factor`` once the validation loss has failed to
    strictly improve for ``patience`` consecutive epochs; the counter restarts.
"""

import logging
import math

from core.models.config import ScheduleConfig, ScheduleKind

from .state import TrainState

logger = logging.getLogger(__name__)


def halving_rate(initial: float, epoch: int, warm_epochs: int) -> float:
    return initial * math.pow(2.0, -max(0, epoch - warm_epochs))


def schedule_update(state: TrainState, schedule: ScheduleConfig, valid_loss: float) -> float:
    """
    Learning rate for ``state.epoch``, given the loss of the epoch just finished.

    Updates the plateau counters and ``state.learning_rate`` in place.
    """
    improved = valid_loss < state.best_valid_loss
    if improved:
        state.best_valid_loss = valid_loss
        state.epochs_since_improvement = 0
    else:
        state.epochs_since_improvement += 1

    previous = state.learning_rate
    if schedule.kind == ScheduleKind.HALVING:
        state.learning_rate = halving_rate(state.initial_learning_rate, state.epoch, schedule.warm_epochs)
    elif state.epochs_since_improvement >= schedule.patience:
        state.learning_rate = previous * schedule.factor
        state.epochs_since_improvement = 0

    if state.learning_rate != previous:
        logger.info("learning_rate_changed", extra={
            "epoch": state.epoch,
            "schedule": schedule.kind.value,
            "previous": previous,
            "learning_rate": state.learning_rate,
        })
    return state.learning_rate
