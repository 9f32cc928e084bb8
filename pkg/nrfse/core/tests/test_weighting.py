import math
from unittest import TestCase

import numpy as np

from nrfse.core.exceptions import DimensionMismatch, InvalidParameters
from nrfse.core.models import AreaLabel, ExtrapolationWindow
from nrfse.core.weighting import (
    SliceMotion,
    WeightParams,
    build_weight_volume,
    rho_mc,
    rho_static,
    rho_volume,
)


def make_window(labels: np.ndarray) -> ExtrapolationWindow:
    p, n, m = labels.shape
    return ExtrapolationWindow(
        origin=(0, 0, 0),
        values=np.zeros(labels.shape),
        labels=labels.astype(np.int8),
        block_offset=(m // 2, n // 2, p // 2),
        block_extent=(1, 1, 1),
    )


class RhoTests(TestCase):
    def setUp(self):
        self.params = WeightParams(rho_hat=0.7, delta=0.5, dims=(5, 5, 1))

    def test_center_is_one(self):
        self.assertEqual(rho_static(2, 2, 0, self.params), 1.0)

    def test_unit_distance(self):
        self.assertAlmostEqual(rho_static(3, 2, 0, self.params), 0.7, places=12)
        self.assertAlmostEqual(rho_static(2, 1, 0, self.params), 0.7, places=12)

    def test_diagonal_distance(self):
        self.assertAlmostEqual(rho_static(3, 3, 0, self.params), 0.7 ** math.sqrt(2), places=12)
        self.assertAlmostEqual(rho_static(3, 3, 0, self.params), 0.60386, places=5)

    def test_zero_motion_matches_static(self):
        params = WeightParams(rho_hat=0.7, dims=(6, 4, 3))
        motion = SliceMotion.zeros(3)
        for m in range(6):
            for n in range(4):
                for p in range(3):
                    self.assertEqual(rho_mc(m, n, p, motion, params), rho_static(m, n, p, params))

    def test_integer_shift_moves_the_weight(self):
        params = WeightParams(rho_hat=0.7, dims=(9, 9, 3))
        motion = SliceMotion([0.0, 0.0, 2.0], [0.0, 0.0, 0.0])
        for m in range(7):
            for n in range(9):
                self.assertAlmostEqual(rho_mc(m + 2, n, 2, motion, params), rho_static(m, n, 2, params), places=12)

    def test_purely_temporal_distance(self):
        params = WeightParams(rho_hat=0.7, dims=(5, 5, 7))
        motion = SliceMotion([1.0, 0, 0, 0, 0, 0, 0], [-1.0, 0, 0, 0, 0, 0, 0])
        self.assertAlmostEqual(rho_mc(3, 1, 0, motion, params), 0.343, places=12)

    def test_fractional_shifts_are_exact(self):
        params = WeightParams(rho_hat=0.7, dims=(5, 5, 1))
        motion = SliceMotion([0.5], [0.0])
        self.assertAlmostEqual(rho_mc(2, 2, 0, motion, params), 0.7 ** 0.5, places=12)

    def test_motion_length_must_match(self):
        with self.assertRaises(DimensionMismatch):
            rho_mc(0, 0, 0, SliceMotion.zeros(2), self.params)
        with self.assertRaises(DimensionMismatch):
            rho_volume(self.params, SliceMotion.zeros(3))

    def test_motion_must_be_finite(self):
        with self.assertRaises(InvalidParameters):
            SliceMotion([np.nan], [0.0])

    def test_volume_matches_pointwise_evaluation(self):
        params = WeightParams(rho_hat=0.7, dims=(6, 5, 3))
        motion = SliceMotion([-1.25, 0.0, 0.75], [0.5, 0.0, -2.0])
        volume = rho_volume(params, motion)
        self.assertEqual(volume.shape, (3, 5, 6))
        for p in range(3):
            for n in range(5):
                for m in range(6):
                    self.assertAlmostEqual(volume[p, n, m], rho_mc(m, n, p, motion, params), places=12)


class BuildWeightVolumeTests(TestCase):
    def setUp(self):
        self.params = WeightParams(rho_hat=0.7, delta=0.5)
        rng = np.random.default_rng(0)
        self.labels = rng.integers(0, 4, size=(3, 9, 9))

    def test_loss_voxels_get_zero(self):
        labels = np.full((1, 5, 5), AreaLabel.LOSS)
        weights = build_weight_volume(make_window(labels), None, self.params)
        self.assertFalse(weights.w.any())

    def test_reconstructed_center_gets_delta(self):
        labels = np.full((1, 5, 5), AreaLabel.SUPPORT)
        labels[0, 2, 2] = AreaLabel.RECONSTRUCTED
        weights = build_weight_volume(make_window(labels), None, self.params)
        self.assertEqual(weights.w[0, 2, 2], 0.5)

    def test_all_support_window_is_rho(self):
        labels = np.full((3, 7, 9), AreaLabel.SUPPORT)
        weights = build_weight_volume(make_window(labels), None, self.params)
        expected = rho_volume(self.params.model_copy(update={"dims": (9, 7, 3)}))
        self.assertTrue(np.array_equal(weights.w, expected))

    def test_zero_motion_equals_static(self):
        window = make_window(self.labels)
        static = build_weight_volume(window, None, self.params)
        zero = build_weight_volume(window, SliceMotion.zeros(3), self.params)
        self.assertTrue(np.array_equal(static.w, zero.w))

    def test_weight_is_positive_exactly_on_support_and_reconstructed(self):
        window = make_window(self.labels)
        motion = SliceMotion([1.5, 0.0, -3.0], [0.0, 0.0, 2.0])
        weights = build_weight_volume(window, motion, self.params)
        carries = np.isin(self.labels, [AreaLabel.SUPPORT, AreaLabel.RECONSTRUCTED])
        self.assertTrue(np.array_equal(weights.w > 0, carries))

    def test_static_weight_decays_with_distance(self):
        labels = np.full((3, 9, 9), AreaLabel.SUPPORT)
        weights = build_weight_volume(make_window(labels), None, self.params).w
        p, n, m = np.indices(weights.shape)
        distance = np.sqrt((m - 4) ** 2 + (n - 4) ** 2 + (p - 1) ** 2).ravel()
        order = np.argsort(distance, kind="stable")
        self.assertTrue(np.all(np.diff(weights.ravel()[order]) <= 1e-15))

    def test_integer_shift_covariance(self):
        labels = np.full((3, 11, 11), AreaLabel.SUPPORT)
        window = make_window(labels)
        motion = SliceMotion([-2.0, 0.0, 1.0], [1.0, 0.0, 3.0])
        shifted = build_weight_volume(window, motion, self.params).w
        static = build_weight_volume(window, None, self.params).w
        for p in range(3):
            dx, dy = int(motion.vx[p]), int(motion.vy[p])
            for n in range(11):
                for m in range(11):
                    if 0 <= m - dx < 11 and 0 <= n - dy < 11:
                        self.assertAlmostEqual(shifted[p, n, m], static[p, n - dy, m - dx], places=12)

    def test_maximum_follows_the_shifted_center(self):
        labels = np.full((3, 9, 9), AreaLabel.SUPPORT)
        motion = SliceMotion([-1.3, 0.0, 2.0], [0.4, 0.0, -1.0])
        weights = build_weight_volume(make_window(labels), motion, self.params).w
        expected = {0: (4, 3), 1: (4, 4), 2: (3, 6)}
        for p, (n, m) in expected.items():
            self.assertEqual(np.unravel_index(np.argmax(weights[p]), weights[p].shape), (n, m))

    def test_rejects_motion_of_wrong_length(self):
        with self.assertRaises(DimensionMismatch):
            build_weight_volume(make_window(self.labels), SliceMotion.zeros(5), self.params)
