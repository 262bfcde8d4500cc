"""Mutable optimizer state carried across epochs."""

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np


@dataclass
class TrainState:
    """
    State of one training run.

    ``epoch`` is the 1-based index of the epoch about to run; the trainer
    advances it before asking the schedule for the next learning rate.
    """
    learning_rate: float
    initial_learning_rate: float
    epoch: int = 1
    velocity: Dict[str, np.ndarray] = field(default_factory=dict)
    best_valid_loss: float = math.inf
    epochs_since_improvement: int = 0
    clip_count: int = 0
    clamp_count: int = 0

    @classmethod
    def start(cls, learning_rate: float, parameters: Mapping[str, np.ndarray]) -> "TrainState":
        return cls(
            learning_rate=learning_rate,
            initial_learning_rate=learning_rate,
            velocity={name: np.zeros_like(value) for name, value in parameters.items()},
        )

    def reset_counters(self) -> None:
        self.clip_count = 0
        self.clamp_count = 0
