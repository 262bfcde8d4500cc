"""
Experiment orchestration module.
"""

from .experiment import FRAME_COLUMNS, ExperimentRunner

__all__ = ['ExperimentRunner', 'FRAME_COLUMNS']
