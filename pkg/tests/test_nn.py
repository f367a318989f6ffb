import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from oracles import max_relative_error, numerical_grad
from pwfed import MlpArchitecture, ModelParams, ShapeError, forward, init_params, loss_and_grad
from pwfed.nn import loss


def zero_params(arch):
    return ModelParams((name, np.zeros(shape)) for name, shape in arch.param_shapes())


def random_net(rng, max_params=2000):
    while True:
        arch = MlpArchitecture(
            input_dim=int(rng.integers(1, 12)),
            hidden_dims=tuple(int(h) for h in rng.integers(1, 16, size=rng.integers(0, 3))),
            num_classes=int(rng.integers(2, 6)),
        )
        if arch.num_params <= max_params:
            return arch


def test_default_architecture_size():
    # 784*128 + 128 + 128*10 + 10
    assert MlpArchitecture().num_params == 101_770


def test_zero_network_is_uniform(rng):
    arch = MlpArchitecture(4, (3,), 5)
    probs = forward(zero_params(arch), arch, rng.standard_normal((6, 4)))
    assert_array_equal(probs, np.full((6, 5), 0.2))


def test_saturated_softmax():
    arch = MlpArchitecture(1, (), 2)
    params = ModelParams([("dense_0/kernel", np.array([[10.0, -10.0]])), ("dense_0/bias", np.zeros(2))])
    probs = forward(params, arch, np.ones((1, 1)))
    assert_allclose(probs[0], [1.0, 0.0], atol=1e-4)


def test_rows_sum_to_one_over_random_instances(rng):
    for _ in range(100):
        arch = random_net(rng, max_params=400)
        params = init_params(arch, int(rng.integers(1 << 30)))
        x = rng.standard_normal((int(rng.integers(1, 9)), arch.input_dim)) * 3
        probs = forward(params, arch, x)
        assert probs.shape == (x.shape[0], arch.num_classes)
        assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert np.all((probs > 0) & (probs < 1))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3), st.integers(0, 2**31 - 1))
def test_softmax_normalized_for_any_finite_input(row, seed):
    arch = MlpArchitecture(3, (4,), 3)
    probs = forward(init_params(arch, seed), arch, np.array([row]))
    assert abs(probs.sum() - 1.0) <= 1e-9


def test_structure_mismatch_raises(small_arch, small_params):
    other = MlpArchitecture(5, (7,), 3)
    with pytest.raises(ShapeError):
        forward(small_params, other, np.zeros((1, 5)))
    with pytest.raises(ShapeError):
        forward(small_params, small_arch, np.zeros((1, 4)))


def test_perfect_prediction_has_near_zero_loss():
    arch = MlpArchitecture(1, (), 2)
    params = ModelParams([("dense_0/kernel", np.array([[10.0, -10.0]])), ("dense_0/bias", np.zeros(2))])
    value, _ = loss_and_grad(params, arch, np.ones((3, 1)), np.zeros(3, dtype=int))
    assert 0 <= value < 1e-4


@pytest.mark.parametrize("num_classes", [2, 3, 10])
def test_uniform_prediction_loss_is_log_c(num_classes, rng):
    arch = MlpArchitecture(4, (6,), num_classes)
    labels = rng.integers(0, num_classes, size=8)
    value, _ = loss_and_grad(zero_params(arch), arch, rng.standard_normal((8, 4)), labels)
    assert abs(value - math.log(num_classes)) <= 1e-9


def test_one_hot_and_index_labels_agree(small_arch, small_params, rng):
    x = rng.standard_normal((4, 5))
    y = np.array([0, 2, 1, 2])
    a, ga = loss_and_grad(small_params, small_arch, x, y)
    b, gb = loss_and_grad(small_params, small_arch, x, np.eye(3)[y])
    assert a == b
    assert ga.equals(gb)


def test_empty_batch_rejected(small_arch, small_params):
    with pytest.raises(ValueError):
        loss_and_grad(small_params, small_arch, np.zeros((0, 5)), np.zeros(0, dtype=int))


def test_out_of_range_label_rejected(small_arch, small_params):
    with pytest.raises(ValueError):
        loss_and_grad(small_params, small_arch, np.zeros((1, 5)), np.array([3]))


def test_gradients_match_finite_differences(rng):
    worst = 0.0
    for _ in range(20):
        arch = random_net(rng)
        params = init_params(arch, int(rng.integers(1 << 30)))
        # nonzero biases so ReLU kinks are not all at the same place
        params = params.map(lambda t: t + 0.1 * rng.standard_normal(t.shape))
        batch = int(rng.integers(1, 6))
        x = rng.standard_normal((batch, arch.input_dim))
        y = rng.integers(0, arch.num_classes, size=batch)
        _, grads = loss_and_grad(params, arch, x, y)
        numeric = numerical_grad(params, arch, x, y)
        worst = max(worst, max_relative_error(grads, numeric))
    assert worst <= 1e-4


def test_grads_share_param_structure(small_arch, small_params, rng):
    _, grads = loss_and_grad(small_params, small_arch, rng.standard_normal((3, 5)), [0, 1, 2])
    assert grads.is_compatible(small_params)


def test_loss_never_negative(small_arch, rng):
    for seed in range(20):
        params = init_params(small_arch, seed).map(lambda t: 5 * t)
        assert loss(params, small_arch, rng.standard_normal((4, 5)), rng.integers(0, 3, 4)) >= 0


def test_init_is_deterministic(small_arch):
    assert init_params(small_arch, 7).equals(init_params(small_arch, 7))
    assert not init_params(small_arch, 7).equals(init_params(small_arch, 8))


def test_init_biases_zero_and_kernels_bounded(small_arch):
    params = init_params(small_arch, 1)
    for name, t in params.items():
        if name.endswith("bias"):
            assert_array_equal(t, 0.0)
        else:
            fan_in, fan_out = t.shape
            assert np.abs(t).max() <= math.sqrt(6 / (fan_in + fan_out))


def test_modelparams_flatten_roundtrip(small_params):
    again = small_params.unflatten(small_params.flatten())
    assert again.equals(small_params)
    with pytest.raises(ValueError):
        ModelParams([("a", np.zeros(1)), ("a", np.zeros(1))])
