"""Two-layer graph convolutional encoder.

Forward rule: H = A_hat @ relu(A_hat @ X @ W0) @ W1. The final layer is
deliberately linear: the embeddings feed cosine similarities, and a
terminal relu would pin them to the non-negative orthant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numcore import Tensor, matmul, relu


@dataclass(frozen=True)
class GcnParams:
    w0: Tensor  # num_features x hidden
    w1: Tensor  # hidden x embed_dim

    def named(self) -> dict[str, Tensor]:
        return {"w0": self.w0, "w1": self.w1}

    def replaced(self, named: dict[str, Tensor]) -> "GcnParams":
        return GcnParams(w0=named["w0"], w1=named["w1"])


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_gcn_params(
    num_features: int, hidden_dim: int, embed_dim: int, seed: int
) -> GcnParams:
    rng = np.random.default_rng(seed)
    return GcnParams(
        w0=Tensor(glorot_uniform(rng, num_features, hidden_dim), requires_grad=True),
        w1=Tensor(glorot_uniform(rng, hidden_dim, embed_dim), requires_grad=True),
    )


def gcn_forward(x: Tensor, a_hat: Tensor, params: GcnParams) -> Tensor:
    """Encode all nodes at once; recorded on the active tape if any."""
    hidden = relu(matmul(matmul(a_hat, x), params.w0))
    return matmul(matmul(a_hat, hidden), params.w1)
