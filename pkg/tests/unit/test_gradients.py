"""
Randomized gradient checks.

Every differentiable primitive is checked against central differences over a
sweep of seeds, then the composed paths: batch losses, and whole networks
from parameters through pooling (or CTC) to the batch loss.
"""

import os
import sys

import numpy as np
import pytest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from core.autodiff import Tensor, gru
from core.autodiff import primitives as P
from core.autodiff.gradcheck import analytic_gradients, check_gradients
from core.models.bag import Bag
from core.models.config import AveragingConvention, HeadKind, ModelConfig, ObjectiveKind
from core.models.labels import WeakLabel
from core.models.predictions import PoolingKind
from core.networks import NetworkOutput, SequenceNetwork
from core.objectives import batch_loss, ctc_loss, required_frames
from core.objectives.pooling import pool_tensor

GRAD_TOLERANCE = 1e-5
SEEDS = range(5)


def _weighted(out: Tensor, weights: np.ndarray) -> Tensor:
    return P.sum_all(P.mul_const(out, weights))


def _projection(op, shape, rng):
    weights = rng.normal(size=shape)
    return lambda *args: _weighted(op(*args), weights)


def _affine(rng):
    fn = _projection(P.affine, (2, 4, 3), rng)
    return fn, [rng.normal(size=(2, 4, 5)), rng.normal(size=(5, 3)), rng.normal(size=3)]


def _matmul(rng):
    return _projection(P.matmul, (3, 2), rng), [rng.normal(size=(3, 4)), rng.normal(size=(4, 2))]


def _elementwise(name):
    def build(rng):
        return _projection(getattr(P, name), (4, 3), rng), [rng.normal(size=(4, 3))]
    return build


def _relu(rng):
    x = rng.normal(size=(5, 3))
    x[np.abs(x) < 0.1] = 0.5
    return _projection(P.relu, (5, 3), rng), [x]


def _binary(rng):
    op = lambda a, b: P.sub(P.mul(a, b), P.scale(P.add(a, b), 0.5))
    return _projection(op, (3, 2), rng), [rng.normal(size=(3, 2)), rng.normal(size=(3, 2))]


def _logs(rng):
    op = lambda t: P.add(P.log(t), P.log1m(t))
    return _projection(op, (4, 2), rng), [rng.uniform(0.05, 0.95, size=(4, 2))]


def _log_complement(rng):
    op = lambda t: P.add(P.neg_expm1(t), P.log_neg_expm1(t))
    return _projection(op, (3,), rng), [-rng.uniform(0.1, 3.0, size=(3,))]


def _time_reductions(rng):
    op = lambda x: P.add(P.max_over_time(x), P.sum_over_time(x))
    return _projection(op, (2, 3), rng), [rng.normal(size=(2, 6, 3))]


def _concat_slice(rng):
    op = lambda a, b: P.concat([P.slice_time(a, 1, 4), b], axis=-1)
    return _projection(op, (3, 5), rng), [rng.normal(size=(5, 2)), rng.normal(size=(3, 3))]


def _conv1d(rng):
    fn = _projection(P.conv1d, (2, 7, 4), rng)
    return fn, [rng.normal(size=(2, 7, 3)), rng.normal(size=(3, 3, 4)), rng.normal(size=4)]


def _max_pool(rng):
    return _projection(lambda x: P.max_pool_time(x, 2), (2, 3, 2), rng), [rng.normal(size=(2, 6, 2))]


def _gru(reverse):
    def build(rng):
        op = lambda x, wx, wh, b: gru(x, wx, wh, b, reverse=reverse)
        arrays = [
            rng.normal(size=(2, 5, 2)),
            rng.normal(scale=0.5, size=(2, 9)),
            rng.normal(scale=0.5, size=(3, 9)),
            rng.normal(scale=0.1, size=9),
        ]
        return _projection(op, (2, 5, 3), rng), arrays
    return build


def _pooling(kind):
    def build(rng):
        weights = rng.normal(size=(2, 3))

        def fn(p):
            pooled = pool_tensor(p, kind)
            out = _weighted(pooled.values, weights)
            if pooled.log_complement is not None:
                out = P.add(out, _weighted(pooled.log_complement, weights))
            return out
        return fn, [rng.uniform(0.05, 0.95, size=(2, 7, 3))]
    return build


def _ctc(rng):
    label = tuple(int(t) for t in rng.integers(0, 3, size=rng.integers(0, 3)))
    assert required_frames(label) <= 5
    return (lambda x: ctc_loss(P.log_softmax(x), label)), [rng.normal(size=(5, 4))]


PRIMITIVE_CASES = {
    "affine": _affine,
    "matmul": _matmul,
    "sigmoid": _elementwise("sigmoid"),
    "tanh": _elementwise("tanh"),
    "exp": _elementwise("exp"),
    "softmax": _elementwise("softmax"),
    "log_softmax": _elementwise("log_softmax"),
    "relu": _relu,
    "binary": _binary,
    "logs": _logs,
    "log_complement": _log_complement,
    "time_reductions": _time_reductions,
    "concat_slice": _concat_slice,
    "conv1d": _conv1d,
    "max_pool_time": _max_pool,
    "gru_forward": _gru(False),
    "gru_reverse": _gru(True),
    "pool_max": _pooling(PoolingKind.MAX),
    "pool_noisy_or": _pooling(PoolingKind.NOISY_OR),
    "ctc": _ctc,
}


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("case", sorted(PRIMITIVE_CASES))
def test_primitive_gradients(case, seed):
    fn, arrays = PRIMITIVE_CASES[case](np.random.default_rng(seed))
    step = 1e-6 if case == "logs" else 1e-4
    assert check_gradients(fn, arrays, step=step) < GRAD_TOLERANCE


def _weak_bag(bag_id, frames, classes, dim=3, rng=None):
    features = np.zeros((frames, dim)) if rng is None else rng.normal(size=(frames, dim))
    return Bag(bag_id, features, 10.0, stored_weak=WeakLabel.from_classes(classes))


def _sequential_bag(bag_id, frames, tokens, dim=3, rng=None):
    features = np.zeros((frames, dim)) if rng is None else rng.normal(size=(frames, dim))
    return Bag(bag_id, features, 10.0, stored_sequential=tuple(tokens))


class TestBatchLossGradient:
    """batch_loss differentiated w.r.t. the network outputs."""

    @pytest.mark.parametrize("seed", range(3))
    @pytest.mark.parametrize("convention", list(AveragingConvention))
    @pytest.mark.parametrize("objective", [ObjectiveKind.MAX, ObjectiveKind.NOISY_OR])
    def test_weak_objectives(self, objective, convention, seed):
        rng = np.random.default_rng(seed)
        groups = [[_weak_bag("a", 4, [0]), _weak_bag("b", 4, [1, 2])], [_weak_bag("c", 6, [])]]
        arrays = [rng.uniform(0.05, 0.95, size=(2, 4, 3)), rng.uniform(0.05, 0.95, size=(1, 6, 3))]

        def fn(first, second):
            outputs = [NetworkOutput(first, None, 10.0), NetworkOutput(second, None, 10.0)]
            return batch_loss(objective, outputs, groups, convention, 3)

        assert check_gradients(fn, arrays) < GRAD_TOLERANCE

    @pytest.mark.parametrize("seed", range(3))
    @pytest.mark.parametrize("convention", list(AveragingConvention))
    def test_ctc_objective(self, convention, seed):
        rng = np.random.default_rng(seed)
        groups = [[_sequential_bag("a", 5, (0, 1)), _sequential_bag("b", 5, (2, 2))], [_sequential_bag("c", 3, (1,))]]
        arrays = [rng.normal(size=(2, 5, 4)), rng.normal(size=(1, 3, 4))]

        def fn(first, second):
            outputs = []
            for logits in (first, second):
                log_probs = P.log_softmax(logits)
                outputs.append(NetworkOutput(P.exp(log_probs), log_probs, 10.0))
            return batch_loss(ObjectiveKind.CTC, outputs, groups, convention, 3)

        assert check_gradients(fn, arrays) < GRAD_TOLERANCE


def _model_loss(network, objective, groups, convention):
    """Batch loss as a function of the network's parameter arrays, in stored order."""
    names = list(network.parameters)

    def fn(*tensors):
        leaves = dict(zip(names, tensors))
        outputs = [network.forward_tensor(np.stack([bag.features for bag in group]), leaves) for group in groups]
        return batch_loss(objective, outputs, groups, convention, network.config.num_classes)

    return fn, [network.parameters[name] for name in names]


class TestWholeModelGradient:
    """Bidirectional GRU -> pooling or CTC -> batch loss, against central differences."""

    @pytest.mark.parametrize("seed", SEEDS)
    @pytest.mark.parametrize("objective", [ObjectiveKind.MAX, ObjectiveKind.NOISY_OR])
    def test_weak_network(self, objective, seed):
        rng = np.random.default_rng(seed)
        config = ModelConfig(input_dim=3, num_classes=2, recurrent_sizes=(3,), head=HeadKind.SIGMOID)
        network = SequenceNetwork.initialize(config, seed)
        groups = [
            [_weak_bag("a", 6, [0], rng=rng), _weak_bag("b", 6, [0, 1], rng=rng)],
            [_weak_bag("c", 4, [], rng=rng)],
        ]
        fn, arrays = _model_loss(network, objective, groups, AveragingConvention.UTTERANCES_AND_CLASSES)
        assert check_gradients(fn, arrays) < GRAD_TOLERANCE

    @pytest.mark.parametrize("seed", SEEDS)
    def test_ctc_network(self, seed):
        rng = np.random.default_rng(seed)
        config = ModelConfig(input_dim=3, num_classes=2, recurrent_sizes=(3,), head=HeadKind.SOFTMAX)
        network = SequenceNetwork.initialize(config, seed)
        groups = [[_sequential_bag("a", 6, (0, 1), rng=rng), _sequential_bag("b", 6, (1, 1), rng=rng)]]
        fn, arrays = _model_loss(network, ObjectiveKind.CTC, groups, AveragingConvention.FRAMES)
        assert check_gradients(fn, arrays) < GRAD_TOLERANCE

    def test_stacked_layers(self):
        rng = np.random.default_rng(11)
        config = ModelConfig(input_dim=2, num_classes=2, recurrent_sizes=(2, 2), head=HeadKind.SIGMOID)
        network = SequenceNetwork.initialize(config, 11)
        groups = [[_weak_bag("a", 5, [1], dim=2, rng=rng)]]
        fn, arrays = _model_loss(network, ObjectiveKind.NOISY_OR, groups, AveragingConvention.FRAMES_AND_CLASSES)
        assert check_gradients(fn, arrays) < GRAD_TOLERANCE


class TestBackwardLinearity:
    """Backward is linear in the upstream gradient."""

    @staticmethod
    def _grads(op, arrays, weights):
        return analytic_gradients(lambda *args: _weighted(op(*args), weights), arrays)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_sum_of_upstreams(self, seed):
        rng = np.random.default_rng(seed)
        op = lambda x, wx, wh, b: P.sigmoid(gru(x, wx, wh, b, reverse=True))
        arrays = [rng.normal(size=(4, 2)), rng.normal(size=(2, 6)), rng.normal(size=(2, 6)), rng.normal(size=6)]
        first, second = rng.normal(size=(4, 2)), rng.normal(size=(4, 2))
        separate = [a + b for a, b in zip(self._grads(op, arrays, first), self._grads(op, arrays, second))]
        combined = self._grads(op, arrays, first + second)
        for a, b in zip(separate, combined):
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_scaled_upstream(self, seed):
        rng = np.random.default_rng(seed)
        op = lambda x, w, b: P.log_softmax(P.conv1d(x, w, b))
        arrays = [rng.normal(size=(5, 2)), rng.normal(size=(3, 2, 3)), rng.normal(size=3)]
        weights = rng.normal(size=(5, 3))
        factor = rng.uniform(-3.0, 3.0)
        base = self._grads(op, arrays, weights)
        scaled = self._grads(op, arrays, factor * weights)
        for a, b in zip(base, scaled):
            np.testing.assert_allclose(b, factor * a, rtol=1e-10, atol=1e-12)
