"""
Objectives: pooling functions, bag-level cross-entropy and CTC.

Importing this package registers the 'ctc' primitive.
"""

from .analysis import loss_analysis
from .bag_loss import LOSS_CLAMP, LossStats, bag_bce, bag_denominator, batch_loss, pooling_for
from .ctc import ctc_loss, ctc_nll, required_frames
from .errors import CTCLabelTooLongError, EmptyBagError
from .pooling import PooledTensor, PooledValue, bag_prediction, pool_max, pool_noisy_or, pool_tensor

__all__ = [
    'CTCLabelTooLongError',
    'EmptyBagError',
    'LOSS_CLAMP',
    'LossStats',
    'PooledTensor',
    'PooledValue',
    'bag_bce',
    'bag_denominator',
    'bag_prediction',
    'batch_loss',
    'ctc_loss',
    'ctc_nll',
    'loss_analysis',
    'pool_max',
    'pool_noisy_or',
    'pool_tensor',
    'pooling_for',
    'required_frames',
]
