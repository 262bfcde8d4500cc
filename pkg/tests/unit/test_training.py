"""
Unit tests for the optimizer, schedules, batching and the training loop.
"""

import math
import os
import sys
import unittest

import numpy as np
import pytest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from core.models.bag import Bag, Dataset, MissingLabelError
from core.models.config import (
    AveragingConvention, BatchConfig, BatchUnit, HeadKind, ModelConfig, ObjectiveKind,
    ObjectiveSpec, ScheduleConfig, ScheduleKind, SelectionCriterion, SynthConfig, TrainConfig,
)
from core.models.labels import WeakLabel
from core.networks import SequenceNetwork
from core.training import (
    DivergenceError, TrainState, clip_gradients, group_by_length, halving_rate, lookahead,
    make_batches, read_epoch_log, schedule_update, sgd_nesterov_step, train, write_epoch_log,
)
from infra.data.synthgen import generate

MAX_SPEC = ObjectiveSpec(ObjectiveKind.MAX, AveragingConvention.UTTERANCES_AND_CLASSES)


def _bags(lengths):
    return [Bag(f"b{i}", np.zeros((n, 2)), 10.0, stored_weak=WeakLabel()) for i, n in enumerate(lengths)]


class TestClipping(unittest.TestCase):

    def test_elementwise_clip_and_count(self):
        clipped, count = clip_gradients({"w": np.array([0.5, -3.0, 2.0, -0.1])}, 1.0)
        np.testing.assert_array_equal(clipped["w"], [0.5, -1.0, 1.0, -0.1])
        self.assertEqual(count, 2)

    def test_tiny_limit_keeps_sign_only(self):
        clipped, count = clip_gradients({"w": np.array([[4.0, -1e-3]])}, 1e-8)
        np.testing.assert_array_equal(clipped["w"], [[1e-8, -1e-8]])
        self.assertEqual(count, 2)

    def test_limit_must_be_positive(self):
        with self.assertRaises(ValueError):
            clip_gradients({"w": np.ones(2)}, 0.0)


class TestNesterov(unittest.TestCase):

    def test_zero_momentum_is_plain_sgd(self):
        params, velocity = {"w": np.array([1.0, 2.0])}, {"w": np.zeros(2)}
        new_params, new_velocity = sgd_nesterov_step(params, velocity, {"w": np.array([0.5, -1.0])}, 0.1, 0.0)
        np.testing.assert_allclose(new_params["w"], [0.95, 2.1])
        np.testing.assert_allclose(new_velocity["w"], [-0.05, 0.1])

    def test_quadratic_bowl_converges(self):
        # L = 0.5 * ||theta||^2, gradient theta
        params, velocity = {"w": np.array([3.0, -2.0])}, {"w": np.zeros(2)}
        for _ in range(200):
            ahead = lookahead(params, velocity, 0.9)
            params, velocity = sgd_nesterov_step(params, velocity, {"w": ahead["w"]}, 0.1, 0.9)
        self.assertLess(np.abs(params["w"]).max(), 1e-6)

    def test_non_finite_gradient(self):
        with self.assertRaises(FloatingPointError):
            sgd_nesterov_step({"w": np.ones(1)}, {"w": np.zeros(1)}, {"w": np.array([np.nan])}, 0.1, 0.9)

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            sgd_nesterov_step({"w": np.ones(2)}, {"w": np.zeros(2)}, {"w": np.ones(3)}, 0.1, 0.9)


class TestSchedules:

    def test_halving_rate(self):
        assert halving_rate(3.0, 12, 12) == 3.0
        assert halving_rate(3.0, 13, 12) == 1.5
        assert halving_rate(3.0, 24, 12) == pytest.approx(3.0 / 4096)

    def test_halving_update_uses_next_epoch(self):
        schedule = ScheduleConfig(kind=ScheduleKind.HALVING, warm_epochs=2, halving_epochs=2)
        state = TrainState.start(1.0, {})
        rates = []
        for epoch in range(1, 5):
            state.epoch = epoch + 1
            rates.append(schedule_update(state, schedule, 1.0))
        assert rates == [1.0, 0.5, 0.25, 0.125]

    def test_plateau_needs_strict_improvement(self):
        schedule = ScheduleConfig(kind=ScheduleKind.PLATEAU, factor=0.5, patience=2)
        state = TrainState.start(1.0, {})
        losses = [1.0, 0.9, 0.9, 0.95, 0.5, 0.6, 0.6]
        rates = [schedule_update(state, schedule, loss) for loss in losses]
        assert rates == [1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.25]


class TestBatching:

    def test_recording_batches(self):
        batches = make_batches(_bags([5] * 7), BatchConfig(BatchUnit.RECORDINGS, 3))
        assert [len(b.bags) for b in batches] == [3, 3, 1]
        assert [b.batch_id for b in batches] == [0, 1, 2]

    def test_frame_batches_never_split_bags(self):
        batches = make_batches(_bags([4, 4, 4, 9, 2]), BatchConfig(BatchUnit.FRAMES, 8))
        assert [b.frames for b in batches] == [8, 4, 9, 2]

    def test_shuffle_visits_every_bag_once(self):
        bags = _bags([3] * 10)
        batches = make_batches(bags, BatchConfig(BatchUnit.RECORDINGS, 4), np.random.default_rng(0))
        seen = sorted(bag.bag_id for batch in batches for bag in batch.bags)
        assert seen == sorted(bag.bag_id for bag in bags)

    def test_group_by_length(self):
        groups = group_by_length(_bags([6, 4, 6, 4, 5]))
        assert [[bag.bag_id for bag in group] for group in groups] == [["b1", "b3"], ["b4"], ["b0", "b2"]]


def _synth(train_bags=20, seed=0):
    return generate(SynthConfig(
        num_classes=3, feature_dim=6, frames_per_bag=30, train_bags=train_bags, valid_bags=6, test_bags=2,
        event_duration=(4, 10), events_per_bag=(1, 2), noise_std=0.5, seed=seed,
    ))


def _network(dataset, head=HeadKind.SIGMOID, seed=0):
    config = ModelConfig(input_dim=dataset.feature_dim, num_classes=dataset.num_classes,
                         recurrent_sizes=(8,), head=head, input_frame_rate=dataset.frame_rate)
    return SequenceNetwork.initialize(config, seed)


def _train_config(**overrides):
    values = dict(
        learning_rate=0.3, momentum=0.9, schedule=ScheduleConfig(warm_epochs=30, halving_epochs=0),
        batch=BatchConfig(BatchUnit.RECORDINGS, 10), epochs=3, seed=0,
    )
    values.update(overrides)
    return TrainConfig(**values)


class TestTrain:

    def test_zero_learning_rate_leaves_parameters(self):
        dataset = _synth()
        network = _network(dataset)
        result = train(network, dataset, MAX_SPEC, _train_config(learning_rate=0.0, epochs=2))
        for name, value in network.parameters.items():
            np.testing.assert_array_equal(result.network.parameters[name], value)
        assert [r.epoch for r in result.records] == [1, 2]

    def test_same_seed_same_run(self):
        dataset = _synth()
        first = train(_network(dataset), dataset, MAX_SPEC, _train_config())
        second = train(_network(dataset), dataset, MAX_SPEC, _train_config())
        assert first.records == second.records
        for name, value in first.network.parameters.items():
            np.testing.assert_array_equal(second.network.parameters[name], value)

    def test_loss_decreases(self):
        dataset = _synth(train_bags=50)
        result = train(_network(dataset), dataset, MAX_SPEC, _train_config(epochs=30))
        losses = [r.train_loss for r in result.records]
        assert all(math.isfinite(loss) for loss in losses)
        assert losses[-1] < 0.8 * losses[0]

    def test_selection_by_valid_loss(self):
        dataset = _synth()
        result = train(_network(dataset), dataset, MAX_SPEC,
                       _train_config(epochs=4, select_by=SelectionCriterion.VALID_LOSS))
        losses = [r.valid_loss for r in result.records]
        assert result.best_epoch == int(np.argmin(losses)) + 1
        assert result.last_network is not None

    def test_ctc_training_runs(self):
        dataset = _synth()
        network = _network(dataset, head=HeadKind.SOFTMAX)
        spec = ObjectiveSpec(ObjectiveKind.CTC, AveragingConvention.FRAMES)
        result = train(network, dataset, spec, _train_config(learning_rate=0.1, epochs=2))
        assert all(math.isfinite(r.train_loss) for r in result.records)

    def test_clip_counts_recorded(self):
        dataset = _synth()
        result = train(_network(dataset), dataset, MAX_SPEC, _train_config(epochs=1, clip_limit=1e-8))
        assert result.records[0].clip_count > 0

    def test_epoch_callback_and_log(self, tmp_path):
        dataset = _synth()
        seen = []
        result = train(_network(dataset), dataset, MAX_SPEC, _train_config(epochs=2), on_epoch=seen.append)
        assert seen == result.records
        table = read_epoch_log(write_epoch_log(result.records, tmp_path / "epoch_log.csv"))
        assert list(table["epoch"]) == [1, 2]

    def test_non_finite_features_diverge(self):
        bad = np.zeros((10, 2))
        bad[3, 0] = np.inf
        train_bags = (Bag("t0", bad, 10.0, stored_weak=WeakLabel.from_classes([0])),)
        valid_bags = (Bag("v0", np.zeros((10, 2)), 10.0, stored_weak=WeakLabel()),)
        dataset = Dataset(("a", "b"), train_bags, valid_bags, ())
        with pytest.raises(DivergenceError) as exc:
            train(_network(dataset), dataset, MAX_SPEC, _train_config(epochs=1))
        assert exc.value.epoch == 1
        assert exc.value.batch_id == 0

    def test_ctc_needs_sequential_labels(self):
        bags = tuple(Bag(f"t{i}", np.zeros((10, 2)), 10.0, stored_weak=WeakLabel.from_classes([0]))
                     for i in range(2))
        dataset = Dataset(("a", "b"), bags, (), ())
        spec = ObjectiveSpec(ObjectiveKind.CTC, AveragingConvention.FRAMES)
        with pytest.raises(MissingLabelError):
            train(_network(dataset, head=HeadKind.SOFTMAX), dataset, spec, _train_config(epochs=1))
