from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cgescan.errors import CgeError, ShapeError
from cgescan.numerics import (
    AdamState,
    ParameterStore,
    adam_step,
    affine,
    finite_diff_grad,
    glorot_uniform,
    log_sigmoid,
    make_rng,
    sigmoid,
    softmax,
    softmax_backward,
)


def test_affine_examples():
    assert affine(np.eye(2), np.array([3.0, 4.0]), np.zeros(2)).tolist() == [3, 4]
    b = np.array([1.5, -2.0])
    assert affine(np.zeros((2, 3)), np.array([1.0, 2.0, 3.0]), b).tolist() == b.tolist()
    assert affine(np.array([[1.0, 2.0], [3.0, 4.0]]), np.ones(2), np.array([1.0, 0.0])).tolist() == [4, 7]


@pytest.mark.parametrize("shapes", [((2, 3), (2,), (2,)), ((2, 3), (3,), (3,)), ((3,), (3,), (3,))])
def test_affine_shape_error(shapes):
    W, x, b = (np.zeros(s) for s in shapes)
    with pytest.raises(ShapeError):
        affine(W, x, b)


def test_softmax_examples():
    assert softmax(np.zeros(2)).tolist() == [0.5, 0.5]
    for c in (-700.0, 0.0, 3.5, 900.0):
        assert np.allclose(softmax(np.full(4, c)), 0.25, atol=1e-15)
    got = softmax(np.log([1.0, 2.0, 3.0]))
    assert np.allclose(got, [1 / 6, 2 / 6, 3 / 6], atol=1e-15)


def test_softmax_simplex_on_many_vectors():
    rng = make_rng(5)
    x = rng.normal(0, 50, size=(100_000, 7))
    y = softmax(x, axis=1)
    assert np.all(y >= 0)
    assert np.max(np.abs(y.sum(axis=1) - 1)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.integers(1, 6), elements=st.floats(-5, 5)),
       arrays(float, 6, elements=st.floats(-5, 5)))
def test_softmax_backward_matches_finite_differences(x, w):
    w = w[:len(x)]
    num = finite_diff_grad(lambda v: float(softmax(v) @ w), x)
    assert np.allclose(softmax_backward(softmax(x), w), num, atol=1e-7)


def test_sigmoid_is_stable():
    assert sigmoid(np.array([-1000.0, 0.0, 1000.0])).tolist() == [0.0, 0.5, 1.0]
    assert math.isclose(log_sigmoid(0.0), -math.log(2))
    assert math.isfinite(log_sigmoid(-1000.0))


def test_adam_zero_gradient():
    p = np.array([1.0, -2.0])
    new, state = adam_step(p, np.zeros(2), AdamState.like(p), 0.01, 0.0)
    assert np.array_equal(new, p) and state.step == 1


def test_adam_descends():
    p = np.array(1.0)
    new, _ = adam_step(p, np.array(1.0), AdamState.like(p), 0.002, 0.0)
    assert new < p


def test_adam_two_steps_reference():
    lr, lam, b1, b2, eps = 0.01, 0.1, 0.9, 0.999, 1e-8
    p, state = np.array([0.7]), AdamState.like(np.array([0.7]))
    grad = np.array([0.3])
    for _ in range(2):
        p, state = adam_step(p, grad, state, lr, lam)
    # the recurrences written out by hand
    x, m, v = 0.7, 0.0, 0.0
    for t in (1, 2):
        g = 0.3 + lam * x
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
    assert p[0] == pytest.approx(x, abs=1e-15) and state.step == 2


def test_adam_shape_error():
    with pytest.raises(ShapeError):
        adam_step(np.zeros(2), np.zeros(3), AdamState.like(np.zeros(2)), 0.1)


def test_finite_diff_examples():
    assert finite_diff_grad(lambda x: float(x[0] ** 2), np.array([3.0]), 1e-5)[0] == pytest.approx(6, abs=1e-8)
    assert np.array_equal(finite_diff_grad(lambda x: 4.0, np.ones(3)), np.zeros(3))
    assert finite_diff_grad(lambda x: math.sin(x[0]), np.array([0.0]), 1e-5)[0] == pytest.approx(1, abs=1e-9)


def test_rng_streams_reproduce():
    a, b = make_rng(42).random(5), make_rng(42).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_rng(43).random(5))


def test_glorot_bounds():
    w = glorot_uniform(make_rng(0), (30, 50))
    assert np.max(np.abs(w)) <= math.sqrt(6 / 80)


def store() -> ParameterStore:
    s = ParameterStore(l2=0.5, hyperparameters={"kind": "timestamp", "d": 4}, seed=9)
    rng = make_rng(1)
    s.add("a", rng.normal(size=(2, 3)))
    s.add("b", rng.normal(size=3))
    return s


def test_store_basics():
    s = store()
    assert s.names() == ["a", "b"]
    with pytest.raises(CgeError):
        s.add("a", np.zeros(1))
    with pytest.raises(CgeError):
        s.apply_gradients({"c": np.zeros(1)}, 0.1)
    expected = 0.25 * (np.sum(s["a"] ** 2) + np.sum(s["b"] ** 2))
    assert s.l2_penalty() == pytest.approx(expected)


def test_store_snapshot_restore():
    s = store()
    snap = s.snapshot()
    s.apply_gradients({"a": np.ones((2, 3))}, 0.1)
    assert not np.array_equal(s["a"], snap["a"])
    s.restore(snap)
    assert np.array_equal(s["a"], snap["a"])


def test_checkpoint_round_trip(tmp_path):
    s = store()
    path = tmp_path / "m.ckpt"
    s.save(path)
    back = ParameterStore.load(path)
    assert back.names() == s.names() and back.seed == 9 and back.l2 == 0.5
    assert back.hyperparameters == s.hyperparameters
    for n in s.names():
        assert back[n].tobytes() == s[n].tobytes()
    assert back.to_bytes() == s.to_bytes()


def test_checkpoint_header_fields():
    header = json.loads(store().to_bytes().splitlines()[0])
    assert {"version", "names", "shapes", "hyperparameters", "seed"} <= set(header)
    assert header["shapes"] == [[2, 3], [3]]


def test_checkpoint_rejects_garbage():
    with pytest.raises(CgeError):
        ParameterStore.from_bytes(b"not json\n")
    good = store().to_bytes().splitlines()
    with pytest.raises(CgeError):
        ParameterStore.from_bytes(b"\n".join(good[:-1]))
