"""
Minibatch construction.

An epoch visits every training bag once in a shuffled order. Recording
batches take a fixed number of bags; frame batches pack whole bags greedily
until the next bag would exceed the frame budget (a bag longer than the
budget forms its own batch).
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.models.bag import Bag
from core.models.config import BatchConfig, BatchUnit


@dataclass(frozen=True)
class Batch:
    batch_id: int
    bags: Tuple[Bag, ...]

    @property
    def frames(self) -> int:
        return sum(bag.frames for bag in self.bags)


def make_batches(bags: Sequence[Bag], config: BatchConfig, rng: Optional[np.random.Generator] = None) -> List[Batch]:
    """Split ``bags`` into batches; shuffled when ``rng`` is given."""
    order = rng.permutation(len(bags)) if rng is not None else np.arange(len(bags))
    ordered = [bags[i] for i in order]

    chunks: List[List[Bag]] = []
    if config.unit == BatchUnit.RECORDINGS:
        chunks = [ordered[i:i + config.size] for i in range(0, len(ordered), config.size)]
    else:
        current: List[Bag] = []
        frames = 0
        for bag in ordered:
            if current and frames + bag.frames > config.size:
                chunks.append(current)
                current, frames = [], 0
            current.append(bag)
            frames += bag.frames
        if current:
            chunks.append(current)

    return [Batch(batch_id=i, bags=tuple(chunk)) for i, chunk in enumerate(chunks)]


def group_by_length(bags: Sequence[Bag]) -> List[List[Bag]]:
    """Equal-length groups, shortest first, batch order kept within a group."""
    groups: Dict[int, List[Bag]] = {}
    for bag in bags:
        groups.setdefault(bag.frames, []).append(bag)
    return [groups[length] for length in sorted(groups)]
