"""Metrics reports: one (metric, split, value) row per number."""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Union

import pandas as pd

METRIC_COLUMNS = ["metric", "split", "value"]


@dataclass(frozen=True)
class MetricRow:
    metric: str
    split: str
    value: float


class MetricsReport:
    """Ordered collection of metric rows."""

    def __init__(self, rows: Iterable[MetricRow] = ()):
        self.rows: List[MetricRow] = list(rows)

    def add(self, metric: str, split: str, value: float) -> None:
        self.rows.append(MetricRow(metric, split, float(value)))

    def get(self, metric: str, split: str) -> float:
        for row in self.rows:
            if row.metric == metric and row.split == split:
                return row.value
        raise KeyError(f"no metric '{metric}' for split '{split}'")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([(r.metric, r.split, r.value) for r in self.rows], columns=METRIC_COLUMNS)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.10g")
        return path

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> "MetricsReport":
        frame = pd.read_csv(path)
        missing = [c for c in METRIC_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f"{path} lacks columns {missing}")
        return cls(MetricRow(str(r.metric), str(r.split), float(r.value)) for r in frame.itertuples(index=False))
