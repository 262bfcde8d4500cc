"""
Parameter checkpoints.

Container (JSON, UTF-8):

    {
      "format": "milseq-checkpoint",
      "version": 1,
      "metadata": {...},
      "parameters": [
        {"name": "head.weight", "shape": [32, 5], "values": [row-major floats]},
        ...
      ]
    }

Floats are written with Python's shortest round-trip repr, so loading returns
bit-identical arrays. Keys are sorted, so identical parameters produce
identical files.
"""

import json
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "milseq-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: Union[str, Path],
    parameters: Mapping[str, np.ndarray],
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "metadata": metadata or {},
        "parameters": [
            {
                "name": name,
                "shape": list(np.shape(values)),
                "values": [float(v) for v in np.ravel(values)],
            }
            for name, values in parameters.items()
        ],
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    logger.info("checkpoint_saved", extra={"path": str(path), "parameters": len(parameters)})
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple["OrderedDict[str, np.ndarray]", Dict[str, Any]]:
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")

    parameters: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for entry in payload["parameters"]:
        shape = tuple(entry["shape"])
        values = np.asarray(entry["values"], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise ValueError(f"parameter {entry['name']}: {values.size} values for shape {shape}")
        parameters[entry["name"]] = values.reshape(shape)
    return parameters, payload.get("metadata", {})
