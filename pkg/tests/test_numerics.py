"""
数值核心测试：参数、softmax、注意力、损失与 SGD
"""
import math

import numpy as np
import pytest

from app.core.exceptions import DimensionMismatchError, ForgeError, NonFiniteError
from app.utils.numerics import (
    ParamStore,
    attention_pool,
    attention_pool_backward,
    cross_entropy,
    entropy,
    grad_check,
    sgd_step,
    softmax,
)


def _scalar_store(value, grad):
    store = ParamStore()
    store.add("p", (1,), init="zeros")
    store["p"][0] = value
    store.grads["p"][0] = grad
    return store


def test_softmax_examples():
    assert softmax(np.zeros(3)) == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    x = np.array([0.5, -1.0, 2.0])
    assert softmax(x + 123.0) == pytest.approx(softmax(x))
    big = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(big))
    assert big[0] == pytest.approx(1.0) and big[1] == pytest.approx(0.0)


def test_attention_single_row():
    V = np.array([[1.0, -2.0, 0.5]])
    result = attention_pool(V, np.array([0.3, 0.1, -4.0]))
    assert result.weights.tolist() == [1.0]
    assert result.context == pytest.approx(V[0])
    assert result.argmax == 0


def test_attention_zero_vector_is_mean():
    V = np.arange(12, dtype=float).reshape(4, 3)
    result = attention_pool(V, np.zeros(3))
    assert result.weights == pytest.approx([0.25] * 4)
    assert result.context == pytest.approx(V.mean(axis=0))


def test_attention_aligned_row_wins():
    result = attention_pool(np.eye(3), np.array([0.0, 5.0, 0.0]))
    assert result.argmax == 1
    assert result.weights[1] > result.weights[0]


def test_attention_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        attention_pool(np.ones((2, 3)), np.ones(2))


def test_attention_backward_matches_finite_differences():
    rng = np.random.default_rng(2)
    V, y, g = rng.normal(size=(5, 4)), rng.normal(size=4), rng.normal(size=4)
    weights = attention_pool(V, y).weights
    analytic = attention_pool_backward(V, weights, g)
    eps = 1e-6
    for k in range(4):
        step = np.zeros(4)
        step[k] = eps
        plus = attention_pool(V, y + step).context @ g
        minus = attention_pool(V, y - step).context @ g
        assert analytic[k] == pytest.approx((plus - minus) / (2 * eps), abs=1e-7)


def test_cross_entropy_examples():
    assert cross_entropy(np.array([0.0, 1.0, 0.0]), 1) == 0.0
    assert cross_entropy(np.full(4, 0.25), 3) == pytest.approx(math.log(4))
    assert cross_entropy(np.array([0.5, 0.5]), 0) == pytest.approx(math.log(2))
    assert cross_entropy(np.array([1.0, 0.0]), 1) == pytest.approx(-math.log(1e-12))
    with pytest.raises(ForgeError):
        cross_entropy(np.array([1.0]), 2)


def test_entropy_examples():
    assert entropy([0.0, 1.0, 0.0]) == 0.0
    assert entropy([1 / 6] * 6) == pytest.approx(math.log(6), abs=1e-12)
    assert entropy([0.5, 0.5, 0.0, 0.0]) == pytest.approx(math.log(2))


def test_sgd_step_examples():
    store = _scalar_store(1.0, 2.0)
    sgd_step(store, 0.1)
    assert store["p"][0] == pytest.approx(0.8)
    assert store.grads["p"][0] == 0.0

    unchanged = _scalar_store(1.0, 2.0)
    sgd_step(unchanged, 0.0)
    assert unchanged["p"][0] == 1.0


def test_sgd_steps_compose_for_constant_gradient():
    store = _scalar_store(1.0, 2.0)
    sgd_step(store, 0.1)
    store.grads["p"][0] = 2.0
    sgd_step(store, 0.1)
    assert store["p"][0] == pytest.approx(0.6)


def test_sgd_momentum_accumulates_velocity():
    store = _scalar_store(0.0, 1.0)
    sgd_step(store, 1.0, momentum=0.5)
    store.grads["p"][0] = 1.0
    sgd_step(store, 1.0, momentum=0.5)
    assert store["p"][0] == pytest.approx(-2.5)


def test_sgd_rejects_non_finite_update():
    store = ParamStore()
    store.add("a", (2,), init="zeros")
    store.add("b", (1,), init="zeros")
    store.grads["a"][:] = 1.0
    store.grads["b"][0] = np.inf
    with pytest.raises(NonFiniteError):
        sgd_step(store, 0.1)
    assert store["a"].tolist() == [0.0, 0.0]


def test_grad_check_quadratic():
    """||p||^2 / 2 has gradient p."""
    store = ParamStore(seed=4)
    store.add("p", (3, 2))
    store.add("q", (5,))

    def loss_fn():
        total = 0.0
        for name in store.names():
            store.grads[name] += store[name]
            total += 0.5 * float(np.sum(store[name] ** 2))
        return total

    assert grad_check(loss_fn, store, epsilon=1e-5) < 1e-8


def test_grad_check_detects_wrong_gradient():
    store = ParamStore(seed=4)
    store.add("p", (4,))

    def loss_fn():
        store.grads["p"] += 3.0 * store["p"]
        return 0.5 * float(np.sum(store["p"] ** 2))

    assert grad_check(loss_fn, store) > 1e-3


def test_param_store_seeded_init():
    a, b = ParamStore(seed=9), ParamStore(seed=9)
    a.add("W", (3, 4))
    b.add("W", (3, 4))
    assert np.array_equal(a["W"], b["W"])
    assert np.all(np.abs(a["W"]) <= math.sqrt(6 / 7))
    with pytest.raises(ForgeError):
        a.add("W", (3, 4))


def test_param_store_json_round_trip():
    store = ParamStore(seed=1)
    store.add("W", (2, 3))
    store.add("b", (2,), init="zeros")
    restored, meta = ParamStore.from_json(store.to_json(meta={"kind": "test"}), store.shapes())
    assert meta == {"kind": "test"}
    assert np.array_equal(restored["W"], store["W"])
    assert restored.shapes() == store.shapes()


def test_param_store_rejects_wrong_shapes():
    store = ParamStore(seed=1)
    store.add("W", (2, 3))
    with pytest.raises(DimensionMismatchError):
        ParamStore.from_json(store.to_json(), {"W": [3, 2]})
    with pytest.raises(DimensionMismatchError):
        ParamStore.from_json(store.to_json(), {"W": [2, 3], "b": [2]})


def test_forward_outputs_stay_finite():
    rng = np.random.default_rng(8)
    for _ in range(50):
        V = rng.uniform(-1e3, 1e3, size=(6, 4))
        result = attention_pool(V, rng.uniform(-1e3, 1e3, size=4))
        assert np.all(np.isfinite(result.context))
        assert np.all(np.isfinite(softmax(V @ rng.normal(size=4))))


if __name__ == "__main__":
    pytest.main([__file__])
