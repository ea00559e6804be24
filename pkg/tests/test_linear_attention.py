import math

import numpy as np
import pytest

import duograph.linear_attention as la
from duograph.linear_attention import (
    AttnLayer,
    attention_layer,
    gumbel_factors,
    init_attn_params,
    kernel_features,
    attention_encoder_forward,
    random_feature_matrix,
)
from duograph.numcore import Tensor

from oracles import dense_softmax_attention, materialized_linear_attention


def test_kernel_features_zero_vector():
    w = random_feature_matrix(seed=0, m=16, dim=3)
    out = kernel_features(Tensor(np.zeros((1, 3))), w, tau_attn=1.0)
    assert np.allclose(out.data, np.full((1, 16), 1.0 / 4.0), atol=1e-12)


def test_kernel_features_strictly_positive():
    rng = np.random.default_rng(1)
    w = random_feature_matrix(seed=2, m=8, dim=4)
    v = Tensor(rng.standard_normal((5, 4)) * 3.0)
    out = kernel_features(v, w, tau_attn=0.5)
    assert (out.data > 0).all()


def test_kernel_features_estimate_softmax_kernel():
    """Mean of 1e4 single-feature estimates vs the closed form exp(x.y)."""
    rng = np.random.default_rng(3)
    w = random_feature_matrix(seed=4, m=10_000, dim=3)
    for _ in range(5):
        x = rng.standard_normal(3)
        y = rng.standard_normal(3)
        x *= rng.uniform(0.3, 0.8) / np.linalg.norm(x)
        y *= rng.uniform(0.3, 0.8) / np.linalg.norm(y)
        phi_x = kernel_features(Tensor(x[None, :]), w, tau_attn=1.0).data[0]
        phi_y = kernel_features(Tensor(y[None, :]), w, tau_attn=1.0).data[0]
        estimate = float(phi_x @ phi_y)
        exact = math.exp(float(x @ y))
        assert abs(estimate - exact) / exact < 0.05


def _unit_layer(dim: int) -> AttnLayer:
    eye = np.eye(dim)
    return AttnLayer(
        wq=Tensor(eye, requires_grad=True),
        wk=Tensor(eye, requires_grad=True),
        wv=Tensor(eye, requires_grad=True),
    )


def test_single_node_attention_returns_value():
    w = random_feature_matrix(seed=5, m=32, dim=3)
    h = Tensor([[0.3, -0.2, 0.9]])
    out = attention_layer(h, _unit_layer(3), w, tau_attn=1.0)
    assert np.allclose(out.data, h.data, atol=1e-12)


def test_identical_keys_give_uniform_mean():
    rng = np.random.default_rng(6)
    h = rng.standard_normal((5, 3))
    w = random_feature_matrix(seed=7, m=64, dim=3)
    layer = AttnLayer(
        wq=Tensor(np.eye(3)),
        wk=Tensor(np.zeros((3, 3))),  # all keys collapse to the zero vector
        wv=Tensor(np.eye(3)),
    )
    out = attention_layer(Tensor(h), layer, w, tau_attn=1.0)
    assert np.allclose(out.data, np.tile(h.mean(axis=0), (5, 1)), atol=1e-9)


@pytest.mark.parametrize("with_gumbel", [False, True])
def test_two_pass_matches_materialized_weights(with_gumbel):
    rng = np.random.default_rng(8)
    n, dim = 12, 4
    h = rng.standard_normal((n, dim))
    w = random_feature_matrix(seed=9, m=16, dim=dim)
    layer = _unit_layer(dim)
    tau = 0.5
    gumbel = gumbel_factors(np.random.default_rng(10), n, tau) if with_gumbel else None

    out = attention_layer(Tensor(h), layer, w, tau, gumbel).data

    phi = lambda v: kernel_features(Tensor(v), w, tau).data
    weights, expected = materialized_linear_attention(
        phi(h), phi(h), h, gumbel=gumbel
    )
    assert np.abs(out - expected).max() < 1e-9
    assert np.abs(weights.sum(axis=1) - 1.0).max() < 1e-9
    assert weights.min() >= 0.0


def test_linear_attention_approximates_dense_softmax():
    rng = np.random.default_rng(11)
    n, dim = 8, 4
    h = rng.standard_normal((n, dim))
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    w = random_feature_matrix(seed=12, m=4096, dim=dim)
    out = attention_layer(Tensor(h), _unit_layer(dim), w, tau_attn=1.0).data
    oracle = dense_softmax_attention(h, h, h, tau=1.0)
    assert np.abs(out - oracle).mean() < 0.05


def test_eval_mode_deterministic():
    params = init_attn_params(4, 5, 3, num_layers=2, num_random_features=16,
                              tau_attn=0.25, seed=13)
    x = Tensor(np.random.default_rng(14).standard_normal((7, 4)))
    out1 = attention_encoder_forward(x, params, mode="eval").data
    out2 = attention_encoder_forward(x, params, mode="eval").data
    assert np.array_equal(out1, out2)


def test_train_mode_reproducible_with_seeded_rng():
    params = init_attn_params(4, 5, 3, num_layers=2, num_random_features=16,
                              tau_attn=0.25, seed=15)
    x = Tensor(np.random.default_rng(16).standard_normal((6, 4)))
    out1 = attention_encoder_forward(x, params, mode="train", rng=np.random.default_rng(9)).data
    out2 = attention_encoder_forward(x, params, mode="train", rng=np.random.default_rng(9)).data
    assert np.array_equal(out1, out2)
    out3 = attention_encoder_forward(x, params, mode="train", rng=np.random.default_rng(10)).data
    assert not np.array_equal(out1, out3)


@pytest.mark.parametrize("n", [1, 2, 9])
def test_output_shape(n):
    params = init_attn_params(3, 4, 5, num_layers=2, num_random_features=8,
                              tau_attn=0.25, seed=17)
    x = Tensor(np.random.default_rng(18).standard_normal((n, 3)))
    assert attention_encoder_forward(x, params, mode="eval").shape == (n, 5)


def test_train_mode_requires_rng():
    params = init_attn_params(3, 4, 5, num_layers=1, num_random_features=8,
                              tau_attn=0.25, seed=19)
    x = Tensor(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        attention_encoder_forward(x, params, mode="train")
    with pytest.raises(ValueError):
        attention_encoder_forward(x, params, mode="predict")


@pytest.mark.parametrize("seed", range(5))
def test_permutation_equivariance_eval_mode(seed):
    rng = np.random.default_rng(20 + seed)
    n = int(rng.integers(3, 17))
    x = rng.standard_normal((n, 4))
    params = init_attn_params(4, 5, 3, num_layers=2, num_random_features=32,
                              tau_attn=0.5, seed=seed)
    perm = rng.permutation(n)
    p = np.eye(n)[perm]
    base = attention_encoder_forward(Tensor(x), params, mode="eval").data
    permuted = attention_encoder_forward(Tensor(p @ x), params, mode="eval").data
    assert np.abs(permuted - p @ base).max() < 1e-9


def test_underflow_clamp_counts():
    la.reset_underflow_count()
    # Norm large enough that exp(w.u - |u|^2/2) underflows to zero for all
    # random features, forcing the denominator clamp.
    h = Tensor(np.full((2, 3), 60.0))
    w = random_feature_matrix(seed=21, m=4, dim=3)
    out = attention_layer(h, _unit_layer(3), w, tau_attn=1.0)
    assert la.underflow_count() > 0
    assert np.isfinite(out.data).all()
    la.reset_underflow_count()
    assert la.underflow_count() == 0
