"""Squared-error pose loss and (weighted) cross entropy."""

import math

import numpy as np
import pytest

from falltcn.errors import ShapeError
from falltcn.nn import cross_entropy, mse_loss


class TestMse:
    def test_equal_inputs_give_zero(self, rng):
        x = rng.normal(size=(4, 9))
        loss, grad = mse_loss(x, x.copy())
        assert loss == 0.0
        assert not grad.any()

    def test_single_coordinate_off_by_two(self):
        pred = np.zeros((1, 6))
        target = np.zeros((1, 6))
        pred[0, 2] = 2.0
        loss, _ = mse_loss(pred, target)
        assert loss == pytest.approx(4.0)

    def test_matches_loop_recomputation(self, rng):
        pred = rng.normal(size=(5, 4, 3))
        target = rng.normal(size=(5, 4, 3))
        loss, _ = mse_loss(pred, target)
        ref = 0.0
        for i in range(5):
            for j in range(4):
                for a in range(3):
                    ref += (pred[i, j, a] - target[i, j, a]) ** 2
        ref /= 5
        assert abs(loss - ref) < 1e-12

    def test_duplicating_the_batch_keeps_the_mean(self, rng):
        pred = rng.normal(size=(3, 7))
        target = rng.normal(size=(3, 7))
        l1, _ = mse_loss(pred, target)
        l2, _ = mse_loss(np.concatenate([pred, pred]),
                         np.concatenate([target, target]))
        assert abs(l1 - l2) < 1e-12

    def test_shape_mismatch_raises(self):
        with pytest.raises(ShapeError):
            mse_loss(np.zeros((2, 3)), np.zeros((2, 4)))

    def test_gradient_matches_finite_differences(self, rng):
        pred = rng.normal(size=(3, 5))
        target = rng.normal(size=(3, 5))
        _, grad = mse_loss(pred, target)
        step = 1e-6
        for i in range(3):
            for j in range(5):
                pred[i, j] += step
                lp, _ = mse_loss(pred, target)
                pred[i, j] -= 2 * step
                lm, _ = mse_loss(pred, target)
                pred[i, j] += step
                assert abs((lp - lm) / (2 * step) - grad[i, j]) < 1e-8


class TestCrossEntropy:
    def test_equal_logits_give_ln2(self):
        loss, _ = cross_entropy(np.array([0.3, 0.3]), 1)
        assert loss == pytest.approx(math.log(2.0), abs=1e-12)

    def test_uniform_weights_reduce_to_unweighted(self, rng):
        for _ in range(1000):
            logits = rng.normal(size=2) * 5
            label = int(rng.integers(0, 2))
            lu, gu = cross_entropy(logits, label)
            lw, gw = cross_entropy(logits, label, weights=(1.0, 1.0))
            assert abs(lu - lw) < 1e-12
            assert np.abs(gu - gw).max() < 1e-12

    def test_fall_weight_scales_the_closed_form(self):
        # fall logit 3, other logit -1: unweighted loss ln(1 + e^-4)
        logits = np.array([-1.0, 3.0])
        loss, _ = cross_entropy(logits, 1, weights=(1.0 / 60.0, 59.0 / 60.0))
        assert loss == pytest.approx((59.0 / 60.0) * math.log1p(math.exp(-4.0)),
                                     rel=1e-12)
        unweighted, _ = cross_entropy(logits, 1)
        assert loss == pytest.approx((59.0 / 60.0) * unweighted, rel=1e-12)

    def test_translation_invariance(self, rng):
        for _ in range(100):
            logits = rng.normal(size=(4, 2)) * 10
            labels = rng.integers(0, 2, size=4)
            l1, _ = cross_entropy(logits, labels)
            l2, _ = cross_entropy(logits + rng.normal() * 50, labels)
            assert abs(l1 - l2) < 1e-12

    def test_extreme_logits_stay_finite(self):
        loss, grad = cross_entropy(np.array([1000.0, -1000.0]), 0)
        assert np.isfinite(loss) and np.isfinite(grad).all()

    def test_gradient_matches_finite_differences(self, rng):
        logits = rng.normal(size=(3, 2))
        labels = np.array([0, 1, 1])
        w = (0.25, 0.75)
        _, grad = cross_entropy(logits, labels, weights=w)
        step = 1e-6
        for i in range(3):
            for j in range(2):
                logits[i, j] += step
                lp, _ = cross_entropy(logits, labels, weights=w)
                logits[i, j] -= 2 * step
                lm, _ = cross_entropy(logits, labels, weights=w)
                logits[i, j] += step
                assert abs((lp - lm) / (2 * step) - grad[i, j]) < 1e-8
