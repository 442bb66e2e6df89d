"""Tests for region head training."""

import itertools

import numpy as np
import pytest

from src.primary.errors import ShapeMismatchError, TrainingDivergedError
from src.primary.masking.train import region_head_loss_and_grad, train_region_head


def _separable(n_out=4):
    labels = np.array(list(itertools.product([0.0, 1.0], repeat=n_out)))
    return 4.0 * (2.0 * labels - 1.0), labels


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 5))
    y = (rng.uniform(size=(6, 3)) > 0.5).astype(np.float64)
    w = rng.normal(0.0, 0.5, size=(5, 3))
    b = rng.normal(0.0, 0.5, size=3)
    _, grad_w, grad_b = region_head_loss_and_grad(w, b, x, y)

    eps = 1e-6
    numeric_w = np.zeros_like(w)
    for idx in np.ndindex(*w.shape):
        plus, minus = w.copy(), w.copy()
        plus[idx] += eps
        minus[idx] -= eps
        numeric_w[idx] = (region_head_loss_and_grad(plus, b, x, y)[0]
                          - region_head_loss_and_grad(minus, b, x, y)[0]) / (2 * eps)
    numeric_b = np.zeros_like(b)
    for i in range(b.size):
        plus, minus = b.copy(), b.copy()
        plus[i] += eps
        minus[i] -= eps
        numeric_b[i] = (region_head_loss_and_grad(w, plus, x, y)[0]
                        - region_head_loss_and_grad(w, minus, x, y)[0]) / (2 * eps)
    np.testing.assert_allclose(grad_w, numeric_w, rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(grad_b, numeric_b, rtol=1e-5, atol=1e-8)


def test_loss_at_zero_logits_is_log2():
    loss, _, _ = region_head_loss_and_grad(np.zeros((2, 2)), np.zeros(2), np.ones((3, 2)), np.ones((3, 2)))
    assert loss == pytest.approx(np.log(2.0))


def test_loss_stays_finite_for_huge_logits():
    loss, _, _ = region_head_loss_and_grad(np.full((1, 1), 1e4), np.zeros(1), np.ones((1, 1)), np.zeros((1, 1)))
    assert loss == pytest.approx(1e4)


def test_separable_problem_is_learned():
    x, y = _separable()
    result = train_region_head(x, y, epochs=200, lr=1.0, seed=0)
    assert result.final_loss < 0.05
    assert len(result.loss_history) == 200
    assert result.loss_history[-1] < result.loss_history[0]
    assert result.weight.dtype == np.float32
    predictions = (x @ result.weight + result.bias) > 0
    np.testing.assert_array_equal(predictions, y.astype(bool))


def test_zero_learning_rate_keeps_weights():
    x, y = _separable()
    initial = (np.full((4, 4), 0.1), np.full(4, -0.2))
    result = train_region_head(x, y, epochs=5, lr=0.0, initial=initial)
    np.testing.assert_array_equal(result.weight, initial[0].astype(np.float32))
    np.testing.assert_array_equal(result.bias, initial[1].astype(np.float32))
    assert len(set(result.loss_history)) == 1


def test_all_true_labels_push_bias_up():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(10, 3))
    y = np.ones((10, 3))
    result = train_region_head(x, y, epochs=50, lr=0.5, initial=(np.zeros((3, 3)), np.zeros(3)))
    assert np.all(result.bias > 0)
    assert all(later <= earlier for earlier, later in zip(result.loss_history, result.loss_history[1:]))


def test_training_is_deterministic_per_seed():
    x, y = _separable()
    a = train_region_head(x, y, epochs=10, seed=7)
    b = train_region_head(x, y, epochs=10, seed=7)
    c = train_region_head(x, y, epochs=10, seed=8)
    np.testing.assert_array_equal(a.weight, b.weight)
    assert not np.array_equal(a.weight, c.weight)


def test_grid_labels_are_flattened():
    x = np.zeros((2, 4))
    y = np.zeros((2, 2, 2), dtype=bool)
    result = train_region_head(x, y, epochs=1)
    assert result.weight.shape == (4, 4)


def test_plateau_lowers_learning_rate():
    x = np.zeros((2, 3))
    y = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    result = train_region_head(x, y, epochs=8, lr=0.5, initial=(np.zeros((3, 3)), np.zeros(3)),
                               plateau_patience=3)
    assert result.lr_history[:4] == [0.5] * 4
    assert result.lr_history[4] == pytest.approx(0.05)
    assert result.lr_history[7] == pytest.approx(0.005)


def test_shape_errors():
    with pytest.raises(ShapeMismatchError):
        train_region_head(np.zeros((3, 4)), np.zeros((2, 4)))
    with pytest.raises(ShapeMismatchError):
        train_region_head(np.zeros((2, 4)), np.zeros((2, 4)), initial=(np.zeros((3, 4)), np.zeros(4)))


def test_non_finite_loss_is_reported():
    x = np.array([[np.nan, 0.0]])
    with pytest.raises(TrainingDivergedError):
        train_region_head(x, np.ones((1, 2)), epochs=3)
