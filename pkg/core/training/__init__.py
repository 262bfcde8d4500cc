"""Training: Nesterov SGD, clipping, schedules, batching and the epoch loop."""

from .batching import Batch, group_by_length, make_batches
from .epoch_log import EPOCH_COLUMNS, EpochRecord, epoch_frame, read_epoch_log, write_epoch_log
from .errors import DivergenceError
from .optimizer import clip_gradients, lookahead, sgd_nesterov_step
from .schedule import halving_rate, schedule_update
from .state import TrainState
from .trainer import TrainResult, evaluate_loss, required_label, train, validation_tagging_f1

__all__ = [
    'Batch',
    'DivergenceError',
    'EPOCH_COLUMNS',
    'EpochRecord',
    'TrainResult',
    'TrainState',
    'clip_gradients',
    'epoch_frame',
    'evaluate_loss',
    'group_by_length',
    'halving_rate',
    'lookahead',
    'make_batches',
    'read_epoch_log',
    'required_label',
    'schedule_update',
    'sgd_nesterov_step',
    'train',
    'validation_tagging_f1',
    'write_epoch_log',
]
