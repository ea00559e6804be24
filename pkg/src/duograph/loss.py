"""Multi-positive contrastive objective over the two embedding views.

For an anchor node i in one view, the positives are its own embedding in
the other view plus both views' embeddings of every node in P_i (2|P_i|+1
pairs); all remaining nodes in both views are negatives. Each per-node
term is

    l_i = -log( numerator / denominator )

with numerator the positive exponentials e^{s/tau} and denominator the
self term plus all 2(N-1) other-node exponentials. Sums are shifted by a
per-row constant before exponentiation; the shift cancels in the log
ratio, so values are exact while overflow at small tau is impossible.
"""

from __future__ import annotations

import numpy as np

from .numcore import Tensor, exp, log, matmul, row_sum, sum_all, transpose


class ConfigError(ValueError):
    """A hyperparameter violates its documented range."""


def _check_tau(tau_cl: float) -> None:
    if tau_cl <= 0:
        raise ConfigError(f"contrastive temperature must be positive, got {tau_cl}")


def node_loss(
    i: int,
    h_theta_n: np.ndarray,
    h_phi_n: np.ndarray,
    positives_i,
    tau_cl: float,
    anchor_view: str = "theta",
) -> float:
    """Loss term for one anchor; inputs must be row-normalized already."""
    _check_tau(tau_cl)
    if anchor_view not in ("theta", "phi"):
        raise ValueError(f"anchor_view must be 'theta' or 'phi', got {anchor_view!r}")
    if i in positives_i:
        raise ValueError(f"positive set of node {i} must not contain the node itself")

    if anchor_view == "theta":
        anchor, same, cross = h_theta_n[i], h_theta_n, h_phi_n
    else:
        anchor, same, cross = h_phi_n[i], h_phi_n, h_theta_n

    s_same = same @ anchor
    s_cross = cross @ anchor  # entry i is the cross-view self similarity
    others = np.arange(len(s_same)) != i

    shift = max(
        s_same[others].max() if others.any() else -np.inf, s_cross.max()
    ) / tau_cl
    e_same = np.exp(s_same / tau_cl - shift)
    e_cross = np.exp(s_cross / tau_cl - shift)

    pos = sorted(positives_i)
    numerator = e_cross[i] + e_same[pos].sum() + e_cross[pos].sum()
    denominator = e_cross[i] + e_same[others].sum() + e_cross[others].sum()
    return float(np.log(denominator) - np.log(numerator))


def total_loss(
    h_theta_n: Tensor,
    h_phi_n: Tensor,
    positives,
    tau_cl: float,
) -> Tensor:
    """Mean loss over both anchor views and all nodes, recorded on tape."""
    _check_tau(tau_cl)
    n = h_theta_n.rows
    if h_phi_n.rows != n:
        raise ValueError(f"view sizes differ: {n} vs {h_phi_n.rows}")

    pos_mask = np.zeros((n, n))
    for i, pos in enumerate(positives):
        for j in pos:
            if j == i:
                raise ValueError(f"positive set of node {i} contains the node itself")
            pos_mask[i, j] = 1.0
    offdiag = 1.0 - np.eye(n)

    s_same_theta = matmul(h_theta_n, transpose(h_theta_n))
    s_same_phi = matmul(h_phi_n, transpose(h_phi_n))
    s_cross = matmul(h_theta_n, transpose(h_phi_n))
    self_col = row_sum(h_theta_n * h_phi_n)  # diag of s_cross, without an n x n mask

    loss_theta = _anchor_losses(
        s_same_theta, s_cross, self_col, pos_mask, offdiag, tau_cl
    )
    loss_phi = _anchor_losses(
        s_same_phi, transpose(s_cross), self_col, pos_mask, offdiag, tau_cl
    )
    return (sum_all(loss_theta) + sum_all(loss_phi)) * (1.0 / (2 * n))


def _anchor_losses(
    s_same: Tensor,
    s_cross: Tensor,
    self_col: Tensor,
    pos_mask: np.ndarray,
    offdiag: np.ndarray,
    tau_cl: float,
) -> Tensor:
    """Column of per-node losses for one anchor view."""
    # Per-row shift over every denominator term; a constant on the tape.
    same_vals = np.where(offdiag > 0, s_same.data, -np.inf)
    shift = np.maximum(same_vals.max(axis=1), s_cross.data.max(axis=1)) / tau_cl
    shift_col = Tensor(shift[:, None])

    e_same = exp(s_same * (1.0 / tau_cl) - shift_col)
    e_cross = exp(s_cross * (1.0 / tau_cl) - shift_col)
    e_self = exp(self_col * (1.0 / tau_cl) - shift_col)

    off_t = Tensor(offdiag)
    pos_t = Tensor(pos_mask)
    numerator = e_self + row_sum(e_same * pos_t) + row_sum(e_cross * pos_t)
    denominator = e_self + row_sum(e_same * off_t) + row_sum(e_cross * off_t)
    return log(denominator) - log(numerator)
