"""Per-epoch training log, one CSV row per epoch."""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd

EPOCH_COLUMNS = ["epoch", "lr", "train_loss", "valid_loss", "clip_count", "clamp_count"]


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    valid_loss: Optional[float]
    clip_count: int
    clamp_count: int


def epoch_frame(records: List[EpochRecord]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in records], columns=EPOCH_COLUMNS)


def write_epoch_log(records: List[EpochRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    epoch_frame(records).to_csv(path, index=False, float_format="%.10g")
    return path


def read_epoch_log(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path)
