"""
Unit tests for core models.
"""

import os
import sys
import unittest

import numpy as np

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from core.models.bag import Bag, Dataset, MissingLabelError
from core.models.config import HeadKind
from core.models.labels import EventInterval, LabelKind, WeakLabel
from core.models.predictions import BagPrediction, FramePredictions, PoolingKind, ThresholdVector


def _features(frames=20, dim=4):
    return np.zeros((frames, dim))


class TestWeakLabel(unittest.TestCase):
    """Test WeakLabel model."""

    def test_vector_and_membership(self):
        label = WeakLabel.from_classes([2, 0])
        self.assertIn(0, label)
        self.assertNotIn(1, label)
        self.assertEqual(len(label), 2)
        np.testing.assert_array_equal(label.as_vector(3), [1.0, 0.0, 1.0])
        self.assertEqual(label.sorted_classes(), (0, 2))

    def test_class_outside_inventory(self):
        with self.assertRaises(ValueError):
            WeakLabel.from_classes([5]).as_vector(3)
        with self.assertRaises(ValueError):
            WeakLabel.from_classes([-1])


class TestEventInterval(unittest.TestCase):
    """Test EventInterval model."""

    def test_ordering_follows_timeline(self):
        a = EventInterval(onset=2.0, offset=3.0, class_id=0)
        b = EventInterval(onset=1.0, offset=4.0, class_id=1)
        self.assertEqual(sorted([a, b]), [b, a])
        self.assertAlmostEqual(b.duration, 3.0)

    def test_overlap_is_half_open(self):
        interval = EventInterval(onset=1.0, offset=2.0, class_id=0)
        self.assertTrue(interval.overlaps(1.5, 2.5))
        self.assertFalse(interval.overlaps(2.0, 3.0))
        self.assertFalse(interval.overlaps(0.0, 1.0))

    def test_validation(self):
        with self.assertRaises(ValueError):
            EventInterval(onset=2.0, offset=2.0, class_id=0)
        with self.assertRaises(ValueError):
            EventInterval(onset=-0.1, offset=1.0, class_id=0)


class TestBag(unittest.TestCase):
    """Test Bag label derivation."""

    def test_strong_labels_derive_sequential_and_weak(self):
        bag = Bag("b0", _features(), 10.0, strong=(
            EventInterval(onset=1.0, offset=1.5, class_id=2),
            EventInterval(onset=0.2, offset=0.6, class_id=1),
            EventInterval(onset=1.2, offset=1.8, class_id=1),
        ))
        self.assertEqual(bag.sequential, (1, 2, 1))
        self.assertEqual(bag.weak, WeakLabel.from_classes([1, 2]))
        self.assertEqual(bag.label_kinds, frozenset(LabelKind))
        self.assertAlmostEqual(bag.duration, 2.0)

    def test_sequential_only_bag(self):
        bag = Bag("b1", _features(), 10.0, stored_sequential=(0, 0, 3))
        self.assertEqual(bag.weak, WeakLabel.from_classes([0, 3]))
        self.assertIsNone(bag.strong)
        with self.assertRaises(MissingLabelError) as ctx:
            bag.require(LabelKind.STRONG)
        self.assertEqual(ctx.exception.kind, LabelKind.STRONG)

    def test_weak_only_bag_has_no_sequence(self):
        bag = Bag("b2", _features(), 10.0, stored_weak=WeakLabel.from_classes([1]))
        self.assertIsNone(bag.sequential)
        self.assertEqual(bag.label_kinds, frozenset({LabelKind.WEAK}))

    def test_interval_past_end_rejected(self):
        with self.assertRaises(ValueError):
            Bag("b3", _features(frames=10), 10.0, strong=(EventInterval(onset=0.5, offset=1.5, class_id=0),))

    def test_strong_and_stored_labels_conflict(self):
        with self.assertRaises(ValueError):
            Bag("b4", _features(), 10.0, strong=(), stored_weak=WeakLabel())

    def test_features_read_only(self):
        bag = Bag("b5", _features(), 10.0, strong=())
        with self.assertRaises(ValueError):
            bag.features[0, 0] = 1.0


class TestDataset(unittest.TestCase):
    """Test Dataset model."""

    def setUp(self):
        self.train = (Bag("t0", _features(), 10.0, strong=()),)
        self.valid = (Bag("v0", _features(), 10.0, stored_weak=WeakLabel.from_classes([0])),)

    def test_label_kinds_are_the_common_kinds(self):
        dataset = Dataset(("a", "b"), self.train, self.valid, ())
        self.assertEqual(dataset.label_kinds, frozenset({LabelKind.WEAK}))
        dataset.require(LabelKind.WEAK)
        with self.assertRaises(MissingLabelError):
            dataset.require(LabelKind.SEQUENTIAL)
        dataset.require(LabelKind.SEQUENTIAL, ("train",))

    def test_split_lookup(self):
        dataset = Dataset(("a", "b"), self.train, self.valid, ())
        self.assertEqual(dataset.find("v0").bag_id, "v0")
        self.assertEqual(dataset.split("test"), ())
        with self.assertRaises(ValueError):
            dataset.split("dev")
        with self.assertRaises(KeyError):
            dataset.find("missing")

    def test_feature_dimension_must_agree(self):
        other = (Bag("v1", _features(dim=5), 10.0, strong=()),)
        with self.assertRaises(ValueError):
            Dataset(("a",), self.train, other, ())


class TestPredictions(unittest.TestCase):
    """Test prediction models."""

    def test_softmax_rows_must_sum_to_one(self):
        FramePredictions(np.array([[0.2, 0.8], [0.5, 0.5]]), 10.0, HeadKind.SOFTMAX)
        with self.assertRaises(ValueError):
            FramePredictions(np.array([[0.2, 0.7]]), 10.0, HeadKind.SOFTMAX)

    def test_class_probabilities_drop_blank(self):
        prediction = FramePredictions(np.array([[0.1, 0.2, 0.7]]), 5.0, HeadKind.SOFTMAX)
        self.assertEqual(prediction.class_probabilities().shape, (1, 2))
        np.testing.assert_allclose(prediction.frame_times(), [0.0])

    def test_frame_values_in_unit_interval(self):
        with self.assertRaises(ValueError):
            FramePredictions(np.array([[1.2]]), 10.0)

    def test_bag_prediction_complement_consistency(self):
        BagPrediction(np.array([0.25]), np.log(np.array([0.75])), PoolingKind.MAX)
        with self.assertRaises(ValueError):
            BagPrediction(np.array([0.25]), np.log(np.array([0.5])), PoolingKind.MAX)

    def test_threshold_vector(self):
        thresholds = ThresholdVector.uniform(3)
        self.assertEqual(len(thresholds), 3)
        self.assertEqual(thresholds.replace(1, 0.9)[1], 0.9)
        self.assertEqual(thresholds[1], 0.5)
        with self.assertRaises(ValueError):
            ThresholdVector((1.5,))
        with self.assertRaises(ValueError):
            ThresholdVector(())


if __name__ == '__main__':
    unittest.main()
