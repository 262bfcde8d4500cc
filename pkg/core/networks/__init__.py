"""Instance-level classifiers: conv front end, bidirectional recurrent body, per-frame head."""

from .initialization import check_parameters, init_parameters, parameter_shapes
from .network import NetworkOutput, SequenceNetwork, forward, truncate_frames

__all__ = [
    'NetworkOutput',
    'SequenceNetwork',
    'check_parameters',
    'forward',
    'init_parameters',
    'parameter_shapes',
    'truncate_frames',
]
