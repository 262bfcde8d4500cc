"""
Unit tests for pooling functions and bag losses.
"""

import os
import sys

import numpy as np
import pytest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from core.autodiff import Tape, Tensor
from core.autodiff import primitives as P
from core.autodiff.gradcheck import check_gradients
from core.models.bag import Bag, MissingLabelError
from core.models.config import AveragingConvention, ObjectiveKind
from core.models.labels import WeakLabel
from core.models.predictions import PoolingKind
from core.networks import NetworkOutput
from core.objectives import (
    LOSS_CLAMP, EmptyBagError, LossStats, bag_bce, bag_prediction, batch_loss,
    loss_analysis, pool_max, pool_noisy_or, pool_tensor,
)


class TestPoolMax:

    def test_picks_largest(self):
        assert pool_max([0.1, 0.7, 0.3]) == 0.7

    def test_empty_bag(self):
        with pytest.raises(EmptyBagError):
            pool_max([])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            pool_max([0.5, 1.5])


class TestPoolNoisyOr:

    def test_low_constant_saturates(self):
        pooled = pool_noisy_or(np.full(130, 0.02))
        assert 0.925 <= pooled.value <= 0.931

    def test_moderate_constant_complement_below_resolution(self):
        pooled = pool_noisy_or(np.full(130, 0.2))
        complement = np.exp(pooled.log_complement)
        assert 2.0e-13 <= complement <= 3.0e-13
        assert pooled.value > 1.0 - 1e-12

    def test_agrees_with_direct_product(self):
        rng = np.random.default_rng(0)
        probs = rng.uniform(0.0, 0.3, size=20)
        pooled = pool_noisy_or(probs)
        assert pooled.value == pytest.approx(1.0 - np.prod(1.0 - probs), abs=1e-12)

    def test_monotone_in_length(self):
        values = [pool_noisy_or(np.full(n, 0.05)).value for n in (1, 5, 20, 80)]
        assert values == sorted(values)

    def test_single_frame_is_identity(self):
        assert pool_noisy_or([0.37]).value == pytest.approx(0.37, abs=1e-15)

    def test_empty_bag(self):
        with pytest.raises(EmptyBagError):
            pool_noisy_or(np.zeros(0))


class TestBagPrediction:

    def test_columns_pooled_independently(self):
        probs = np.array([[0.1, 0.5], [0.4, 0.2]])
        prediction = bag_prediction(probs, PoolingKind.MAX)
        np.testing.assert_allclose(prediction.values, [0.4, 0.5])
        prediction = bag_prediction(probs, PoolingKind.NOISY_OR)
        np.testing.assert_allclose(prediction.values, [1 - 0.9 * 0.6, 1 - 0.5 * 0.8])

    def test_empty_matrix(self):
        with pytest.raises(EmptyBagError):
            bag_prediction(np.zeros((0, 3)), PoolingKind.MAX)


class TestPoolTensor:

    def test_max_gradient_goes_to_first_argmax(self):
        probs = Tensor([[0.3, 0.1], [0.8, 0.6], [0.8, 0.2]])
        with Tape() as tape:
            pooled = pool_tensor(probs, PoolingKind.MAX)
            total = P.sum_all(pooled.values)
        grads = tape.backward(total, {"probs": probs})
        np.testing.assert_array_equal(grads["probs"], [[0, 0], [1, 1], [0, 0]])

    def test_noisy_or_gradient(self):
        rng = np.random.default_rng(1)
        probs = rng.uniform(0.05, 0.6, size=(2, 5, 3))
        weights = rng.normal(size=(2, 3))
        fn = lambda t: P.sum_all(P.mul_const(pool_tensor(t, PoolingKind.NOISY_OR).values, weights))
        assert check_gradients(fn, [probs], step=1e-6) < 1e-5

    def test_batched_matches_unbatched(self):
        rng = np.random.default_rng(2)
        probs = rng.uniform(size=(3, 4, 2))
        batched = pool_tensor(probs, PoolingKind.NOISY_OR).values.value
        for i in range(3):
            np.testing.assert_allclose(batched[i], bag_prediction(probs[i], PoolingKind.NOISY_OR).values)


class TestBagLoss:

    def test_max_false_alarm_loss(self):
        probs = np.zeros((130, 1))
        probs[65, 0] = 1.0 - 2e-7
        prediction = bag_prediction(probs, PoolingKind.MAX)
        loss = bag_bce(prediction, WeakLabel(), AveragingConvention.UTTERANCES_AND_CLASSES, 130)
        assert loss == pytest.approx(15.42, rel=0.01)

    def test_noisy_or_false_alarm_loss(self):
        prediction = bag_prediction(np.full((7, 1), 0.999), PoolingKind.NOISY_OR)
        stats = LossStats()
        loss = bag_bce(prediction, WeakLabel(), AveragingConvention.UTTERANCES_AND_CLASSES, 7, stats)
        assert loss >= 48.0
        assert loss == pytest.approx(-7 * np.log(0.001), rel=1e-9)
        assert stats.clamp_count == 0

    def test_noisy_or_absent_class_never_clamped(self):
        # complement 0.8 ** 130 is far below the clamp yet the loss stays exact
        prediction = bag_prediction(np.full((130, 1), 0.2), PoolingKind.NOISY_OR)
        stats = LossStats()
        loss = bag_bce(prediction, WeakLabel(), AveragingConvention.UTTERANCES_AND_CLASSES, 130, stats)
        assert loss == pytest.approx(-130 * np.log(0.8), rel=1e-9)
        assert stats.clamp_count == 0

    def test_max_clamps_and_counts(self):
        prediction = bag_prediction(np.array([[0.0, 1.0, 0.5]]), PoolingKind.MAX)
        stats = LossStats()
        label = WeakLabel.from_classes([0])
        loss = bag_bce(prediction, label, AveragingConvention.UTTERANCES_AND_CLASSES, 1, stats)
        expected = (-np.log(LOSS_CLAMP) - np.log(LOSS_CLAMP) - np.log(0.5)) / 3
        assert loss == pytest.approx(expected)
        assert stats.clamp_count == 2
        assert stats.bags == 1

    def test_averaging_conventions(self):
        prediction = bag_prediction(np.full((10, 2), 0.5), PoolingKind.MAX)
        label = WeakLabel.from_classes([1])
        total = 2 * np.log(2.0)
        assert bag_bce(prediction, label, AveragingConvention.FRAMES, 10) == pytest.approx(total / 10)
        assert bag_bce(prediction, label, AveragingConvention.FRAMES_AND_CLASSES, 10) == pytest.approx(total / 20)
        assert bag_bce(prediction, label, AveragingConvention.UTTERANCES_AND_CLASSES, 10) == pytest.approx(total / 2)

    def test_loss_analysis_table(self):
        table = loss_analysis().set_index("case")
        assert table.loc["max_false_alarm_peak", "loss"] == pytest.approx(15.42, rel=0.01)
        assert table.loc["noisy_or_false_alarm_short", "loss"] >= 48.0
        assert table.loc["noisy_or_miss_low", "loss"] < 0.1
        assert 2.0e-13 <= table.loc["noisy_or_miss_moderate", "bag_complement"] <= 3.0e-13


def _bag(bag_id, frames, classes):
    return Bag(bag_id, np.zeros((frames, 2)), 10.0, stored_weak=WeakLabel.from_classes(classes))


class TestBatchLoss:

    @pytest.mark.parametrize("objective,pooling", [
        (ObjectiveKind.MAX, PoolingKind.MAX),
        (ObjectiveKind.NOISY_OR, PoolingKind.NOISY_OR),
    ])
    @pytest.mark.parametrize("convention", list(AveragingConvention))
    def test_matches_per_bag_losses(self, objective, pooling, convention):
        rng = np.random.default_rng(3)
        groups = [[_bag("a", 4, [0]), _bag("b", 4, [1, 2])], [_bag("c", 6, [])]]
        probs = [rng.uniform(0.05, 0.95, size=(2, 4, 3)), rng.uniform(0.05, 0.95, size=(1, 6, 3))]
        outputs = [NetworkOutput(Tensor(p), None, 10.0) for p in probs]

        loss = batch_loss(objective, outputs, groups, convention, 3)

        expected = 0.0
        for group, p in zip(groups, probs):
            for bag, bag_probs in zip(group, p):
                expected += bag_bce(bag_prediction(bag_probs, pooling), bag.weak, convention, bag_probs.shape[0])
        if convention.per_utterance:
            expected /= 3
        assert loss.item() == pytest.approx(expected, rel=1e-10)

    def test_missing_weak_labels(self):
        bag = Bag("s", np.zeros((4, 2)), 10.0, stored_sequential=None)
        output = NetworkOutput(Tensor(np.full((1, 4, 3), 0.5)), None, 10.0)
        with pytest.raises(MissingLabelError):
            batch_loss(ObjectiveKind.MAX, [output], [[bag]], AveragingConvention.FRAMES, 3)

    def test_stats_count_bags(self):
        stats = LossStats()
        output = NetworkOutput(Tensor(np.full((2, 4, 3), 0.5)), None, 10.0)
        batch_loss(ObjectiveKind.MAX, [output], [[_bag("a", 4, [0]), _bag("b", 4, [])]],
                   AveragingConvention.FRAMES, 3, stats)
        assert stats.bags == 2
        assert stats.clamp_count == 0
