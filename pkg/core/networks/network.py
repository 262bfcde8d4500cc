"""
Instance-level sequence classifier.

Pipeline per input of shape (T, F) or (B, T, F):

    truncate T to a multiple of the total pooling factor
    -> [conv1d (same padding) -> relu -> max_pool_time] per conv layer
    -> [forward gru | reverse gru] concatenated, per recurrent layer
       (dropout on the concatenated outputs while training)
    -> affine head -> sigmoid (C columns) or log_softmax (C + 1 columns)
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from core.autodiff import primitives as P
from core.autodiff.checkpoint import load_checkpoint, save_checkpoint
from core.autodiff.errors import ShapeError
from core.autodiff.recurrent import gru
from core.autodiff.tensor import Tensor
from core.models.config import HeadKind, ModelConfig, to_plain_dict
from core.models.predictions import FramePredictions

from .initialization import DIRECTIONS, check_parameters, init_parameters

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NetworkOutput:
    """Tensors produced by one forward pass."""
    probabilities: Tensor
    log_probabilities: Optional[Tensor]   # softmax heads only
    frame_rate: float


def truncate_frames(features: np.ndarray, total_pooling: int) -> np.ndarray:
    """Drop trailing frames so T is a multiple of ``total_pooling``."""
    frames = features.shape[-2]
    if frames < total_pooling:
        raise ShapeError(f"{frames} frames is shorter than the total pooling factor {total_pooling}")
    keep = (frames // total_pooling) * total_pooling
    return features[..., :keep, :]


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: kept units scaled by 1 / (1 - rate)."""
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


class SequenceNetwork:
    """Model config plus an immutable parameter set."""

    def __init__(self, config: ModelConfig, parameters: Mapping[str, np.ndarray]):
        check_parameters(config, parameters)
        self.config = config
        self.parameters: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name, value in parameters.items():
            array = np.array(value, dtype=np.float64)
            array.setflags(write=False)
            self.parameters[name] = array

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int) -> "SequenceNetwork":
        return cls(config, init_parameters(config, seed))

    def with_parameters(self, parameters: Mapping[str, np.ndarray]) -> "SequenceNetwork":
        return SequenceNetwork(self.config, parameters)

    def tensors(self) -> "OrderedDict[str, Tensor]":
        """Fresh leaf tensors for one recorded forward pass."""
        return OrderedDict((name, Tensor(value, name=name)) for name, value in self.parameters.items())

    def forward_tensor(
        self,
        features: np.ndarray,
        parameters: Optional[Mapping[str, Tensor]] = None,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> NetworkOutput:
        """
        Differentiable forward pass.

        Args:
            features: (T, F) or (B, T, F) input
            parameters: Leaf tensors to differentiate against (defaults to constants)
            training: Enables dropout on recurrent outputs
            rng: Dropout stream, required when training with dropout > 0

        Returns:
            NetworkOutput with (T', D) or (B, T', D) probabilities

        Raises:
            ShapeError: On a feature dimension mismatch or too few frames
        """
        config = self.config
        features = np.asarray(features, dtype=np.float64)
        if features.ndim not in (2, 3) or features.shape[-1] != config.input_dim:
            raise ShapeError(f"features {features.shape} do not match input dim {config.input_dim}")
        params = parameters if parameters is not None else self.tensors()
        use_dropout = training and config.dropout > 0.0
        if use_dropout and rng is None:
            raise ValueError("training with dropout needs an rng")

        x: Any = truncate_frames(features, config.total_pooling)
        for i, layer in enumerate(config.conv_layers):
            x = P.relu(P.conv1d(x, params[f"conv{i}.weight"], params[f"conv{i}.bias"]))
            if layer.pool > 1:
                x = P.max_pool_time(x, layer.pool)

        for j, _ in enumerate(config.recurrent_sizes):
            states = [
                gru(x, params[f"gru{j}.{d}.wx"], params[f"gru{j}.{d}.wh"], params[f"gru{j}.{d}.b"],
                    reverse=(d == "bwd"))
                for d in DIRECTIONS
            ]
            x = P.concat(states, axis=-1)
            if use_dropout:
                x = P.mul_const(x, dropout_mask(x.shape, config.dropout, rng))

        logits = P.affine(x, params["head.weight"], params["head.bias"])
        if config.head == HeadKind.SOFTMAX:
            log_probs = P.log_softmax(logits)
            return NetworkOutput(P.exp(log_probs), log_probs, config.output_frame_rate)
        return NetworkOutput(P.sigmoid(logits), None, config.output_frame_rate)

    def predict(
        self,
        features: np.ndarray,
        recording_id: Optional[str] = None,
    ) -> Union[FramePredictions, List[FramePredictions]]:
        """Inference without a tape; a (B, T, F) stack yields one FramePredictions per bag."""
        output = self.forward_tensor(features, training=False)
        values = np.clip(output.probabilities.value, 0.0, 1.0)
        if values.ndim == 2:
            return FramePredictions(values, output.frame_rate, self.config.head, recording_id)
        return [FramePredictions(v, output.frame_rate, self.config.head) for v in values]

    def predict_bags(self, bags: Sequence, batch_size: int = 64) -> List[FramePredictions]:
        """Predictions for bags in input order; equal-length bags are stacked."""
        results: Dict[int, FramePredictions] = {}
        by_length: Dict[int, List[int]] = {}
        for index, bag in enumerate(bags):
            by_length.setdefault(bag.frames, []).append(index)
        for length in sorted(by_length):
            indices = by_length[length]
            for start in range(0, len(indices), batch_size):
                chunk = indices[start:start + batch_size]
                stacked = np.stack([bags[i].features for i in chunk])
                for i, prediction in zip(chunk, self.predict(stacked)):
                    results[i] = FramePredictions(
                        prediction.values, prediction.frame_rate, prediction.head, bags[i].bag_id
                    )
        return [results[i] for i in range(len(bags))]

    def save(self, path: Union[str, Path], metadata: Optional[Dict[str, Any]] = None) -> Path:
        payload = dict(metadata or {})
        payload["model"] = to_plain_dict(self.config)
        return save_checkpoint(path, self.parameters, payload)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SequenceNetwork":
        parameters, metadata = load_checkpoint(path)
        if "model" not in metadata:
            raise ValueError(f"checkpoint {path} carries no model config")
        return cls(ModelConfig.from_dict(metadata["model"]), parameters)


def forward(
    model: SequenceNetwork,
    features: np.ndarray,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> FramePredictions:
    """Frame predictions for one (T, F) bag; dropout only when ``training``."""
    output = model.forward_tensor(features, training=training, rng=rng)
    values = np.clip(output.probabilities.value, 0.0, 1.0)
    return FramePredictions(values, output.frame_rate, model.config.head)
