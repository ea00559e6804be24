"""Kernelized linear-attention encoder with optional Gumbel perturbation.

Attention weights are never materialized: with positive random features
phi, the row-normalized aggregation

    out_i = sum_j phi(q_i).phi(k_j) c_j v_j / sum_w phi(q_i).phi(k_w) c_w

is computed in O(N m d) by accumulating K = sum_j phi(k_j) c_j v_j^T and
z = sum_j phi(k_j) c_j once, then taking per-node dot products. c_j is the
per-node Gumbel factor exp(g_j / tau) during training and 1 at eval time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numcore import Tensor, clamp_min, exp, matmul, relu, row_sum, transpose

DENOM_FLOOR = 1e-30

_diagnostics = {"underflow_clamps": 0}


def reset_underflow_count() -> None:
    _diagnostics["underflow_clamps"] = 0


def underflow_count() -> int:
    return _diagnostics["underflow_clamps"]


@dataclass(frozen=True)
class AttnLayer:
    wq: Tensor
    wk: Tensor
    wv: Tensor


@dataclass(frozen=True)
class AttnParams:
    """Projections plus the frozen random-feature matrix (m x hidden)."""

    w_in: Tensor
    layers: tuple[AttnLayer, ...]
    w_out: Tensor
    random_features: np.ndarray
    tau_attn: float

    @property
    def num_random_features(self) -> int:
        return self.random_features.shape[0]

    def named(self) -> dict[str, Tensor]:
        out = {"w_in": self.w_in, "w_out": self.w_out}
        for idx, layer in enumerate(self.layers):
            out[f"layer{idx}.wq"] = layer.wq
            out[f"layer{idx}.wk"] = layer.wk
            out[f"layer{idx}.wv"] = layer.wv
        return out

    def replaced(self, named: dict[str, Tensor]) -> "AttnParams":
        layers = tuple(
            AttnLayer(
                wq=named[f"layer{idx}.wq"],
                wk=named[f"layer{idx}.wk"],
                wv=named[f"layer{idx}.wv"],
            )
            for idx in range(len(self.layers))
        )
        return AttnParams(
            w_in=named["w_in"],
            layers=layers,
            w_out=named["w_out"],
            random_features=self.random_features,
            tau_attn=self.tau_attn,
        )


def random_feature_matrix(seed: int, m: int, dim: int) -> np.ndarray:
    """m x dim standard Gaussians, fixed by seed for the whole model life."""
    if m < 1:
        raise ValueError(f"need at least one random feature, got {m}")
    return np.random.default_rng(seed).standard_normal((m, dim))


def init_attn_params(
    num_features: int,
    hidden_dim: int,
    embed_dim: int,
    num_layers: int,
    num_random_features: int,
    tau_attn: float,
    seed: int,
) -> AttnParams:
    if tau_attn <= 0:
        raise ValueError(f"attention temperature must be positive, got {tau_attn}")
    from .gcn import glorot_uniform

    rng = np.random.default_rng(seed)
    layers = tuple(
        AttnLayer(
            wq=Tensor(glorot_uniform(rng, hidden_dim, hidden_dim), requires_grad=True),
            wk=Tensor(glorot_uniform(rng, hidden_dim, hidden_dim), requires_grad=True),
            wv=Tensor(glorot_uniform(rng, hidden_dim, hidden_dim), requires_grad=True),
        )
        for _ in range(num_layers)
    )
    return AttnParams(
        w_in=Tensor(glorot_uniform(rng, num_features, hidden_dim), requires_grad=True),
        layers=layers,
        w_out=Tensor(glorot_uniform(rng, hidden_dim, embed_dim), requires_grad=True),
        random_features=random_feature_matrix(seed + 1, num_random_features, hidden_dim),
        tau_attn=tau_attn,
    )


def kernel_features(v: Tensor, w_rf: np.ndarray, tau_attn: float) -> Tensor:
    """Positive softmax-kernel features of the rows of v.

    phi(u) = exp(W u - |u|^2 / 2) / sqrt(m) applied to u = v / sqrt(tau),
    so that E[phi(x).phi(y)] = exp(x.y / tau). Strictly positive outputs.
    """
    m = w_rf.shape[0]
    u = v * (1.0 / math.sqrt(tau_attn))
    proj = matmul(u, Tensor(w_rf.T))
    half_sq = row_sum(u * u) * 0.5
    return exp(proj - half_sq) * (1.0 / math.sqrt(m))


def gumbel_factors(rng: np.random.Generator, n: int, tau_attn: float) -> np.ndarray:
    """Per-node multiplicative weights exp(g / tau), g ~ Gumbel(0, 1)."""
    g = rng.gumbel(size=(n, 1))
    return np.exp(g / tau_attn)


def attention_layer(
    h: Tensor,
    layer: AttnLayer,
    w_rf: np.ndarray,
    tau_attn: float,
    gumbel: np.ndarray | None = None,
) -> Tensor:
    """One linear-attention aggregation; implied weights row-sum to 1."""
    q = matmul(h, layer.wq)
    k = matmul(h, layer.wk)
    v = matmul(h, layer.wv)
    phi_q = kernel_features(q, w_rf, tau_attn)
    phi_k = kernel_features(k, w_rf, tau_attn)

    phi_k_weighted = phi_k * Tensor(gumbel) if gumbel is not None else phi_k

    summed_kv = matmul(transpose(phi_k_weighted), v)  # m x d
    summed_k = row_sum(transpose(phi_k_weighted))  # m x 1
    numerator = matmul(phi_q, summed_kv)
    denominator = matmul(phi_q, summed_k)

    clamped = int((denominator.data <= DENOM_FLOOR).sum())
    if clamped:
        _diagnostics["underflow_clamps"] += clamped
    return numerator / clamp_min(denominator, DENOM_FLOOR)


def attention_encoder_forward(
    x: Tensor,
    params: AttnParams,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Input projection, stacked attention layers with relu between, head.

    Train mode draws fresh per-node, per-layer Gumbel factors from `rng`;
    eval mode is deterministic (factors identically 1).
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "train" and rng is None:
        raise ValueError("train mode needs a random generator for Gumbel draws")

    h = matmul(x, params.w_in)
    for idx, layer in enumerate(params.layers):
        if idx > 0:
            h = relu(h)
        gumbel = (
            gumbel_factors(rng, h.rows, params.tau_attn) if mode == "train" else None
        )
        h = attention_layer(h, layer, params.random_features, params.tau_attn, gumbel)
    return matmul(h, params.w_out)
