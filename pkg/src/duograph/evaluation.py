"""Frozen-embedding evaluation: linear probe, split sweeps, ablations, PCA.

The probe is multinomial logistic regression fit by plain gradient descent
with an exact Lipschitz step size; the L2 strength is chosen on the
validation split and accuracy is reported on test. Encoder weights are
never touched here.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .graphdata import Graph, GraphValidationError, SplitSet
from .sampling import build_pairs, cosine_knn, positive_correct_ratio, topological_knn
from .trainer import TrainConfig, combine_embeddings, config_fingerprint, train

L2_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)


@dataclass(frozen=True)
class ProbeModel:
    """Fitted probe weights (bias in the last row) and the selected L2."""

    weights: np.ndarray
    l2: float
    val_accuracy: float

    def predict(self, h: np.ndarray) -> np.ndarray:
        logits = _with_bias(h) @ self.weights
        return logits.argmax(axis=1)


@dataclass(frozen=True)
class EvalResult:
    """Per-split accuracies in percent with their mean and population std."""

    accuracies: tuple[float, ...]
    mean: float
    std: float
    fingerprint: str = ""

    @staticmethod
    def from_accuracies(fractions, fingerprint: str = "") -> "EvalResult":
        percents = tuple(100.0 * a for a in fractions)
        return EvalResult(
            accuracies=percents,
            mean=float(np.mean(percents)),
            std=float(np.std(percents)),
            fingerprint=fingerprint,
        )

    def to_dict(self) -> dict:
        return {
            "accuracies": list(self.accuracies),
            "mean": self.mean,
            "std": self.std,
            "fingerprint": self.fingerprint,
        }


def _with_bias(h: np.ndarray) -> np.ndarray:
    return np.hstack([h, np.ones((h.shape[0], 1))])


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _fit_softmax_regression(
    x: np.ndarray,
    y: np.ndarray,
    num_classes: int,
    l2: float,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> np.ndarray:
    """Gradient descent from zero weights with step 1/L; deterministic."""
    n = x.shape[0]
    xb = _with_bias(x)
    onehot = np.zeros((n, num_classes))
    onehot[np.arange(n), y] = 1.0

    # CE Hessian is bounded by (1/2) X^T X / n; the penalty adds l2.
    lipschitz = 0.5 * np.linalg.eigvalsh(xb.T @ xb)[-1] / n + l2
    lr = 1.0 / lipschitz

    w = np.zeros((xb.shape[1], num_classes))
    penalty_mask = np.ones_like(w)
    penalty_mask[-1, :] = 0.0  # bias row unpenalized
    for _ in range(max_iter):
        probs = _softmax(xb @ w)
        grad = xb.T @ (probs - onehot) / n + l2 * w * penalty_mask
        if np.abs(grad).max() < tol:
            break
        w = w - lr * grad
    return w


def fit_probe(
    h: np.ndarray,
    labels: np.ndarray,
    split: SplitSet,
    l2_grid=L2_GRID,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> ProbeModel:
    """Fit on train only; pick the L2 value by validation accuracy."""
    labels = np.asarray(labels)
    num_classes = int(labels.max()) + 1
    train_idx = np.array(split.train)
    present = set(labels[train_idx].tolist())
    missing = [c for c in range(num_classes) if c not in present]
    if missing:
        raise GraphValidationError(
            f"degenerate split: classes {missing} absent from the train set"
        )

    best: ProbeModel | None = None
    val_idx = np.array(split.val)
    for l2 in l2_grid:
        w = _fit_softmax_regression(
            h[train_idx], labels[train_idx], num_classes, l2, max_iter, tol
        )
        preds = (_with_bias(h[val_idx]) @ w).argmax(axis=1)
        val_acc = float((preds == labels[val_idx]).mean())
        if best is None or val_acc > best.val_accuracy:
            best = ProbeModel(weights=w, l2=l2, val_accuracy=val_acc)
    return best


def linear_probe(h: np.ndarray, labels: np.ndarray, split: SplitSet) -> float:
    """Test accuracy (fraction) of the probe selected on validation."""
    model = fit_probe(h, labels, split)
    test_idx = np.array(split.test)
    preds = model.predict(h[test_idx])
    return float((preds == np.asarray(labels)[test_idx]).mean())


def evaluate_over_splits(
    h: np.ndarray,
    labels: np.ndarray,
    splits,
    fingerprint: str = "",
    jobs: int = 1,
) -> EvalResult:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            accs = list(pool.map(lambda s: linear_probe(h, labels, s), splits))
    else:
        accs = [linear_probe(h, labels, s) for s in splits]
    return EvalResult.from_accuracies(accs, fingerprint)


def ablation_run(
    graph: Graph, config: TrainConfig, variant: str, splits, jobs: int = 1
) -> EvalResult:
    """Train the requested variant and evaluate the fused embeddings."""
    cfg = replace(config, variant=variant)
    result = train(graph, cfg)
    fused = combine_embeddings(result.h_theta, result.h_phi, cfg.fusion_weight)
    return evaluate_over_splits(
        fused, graph.labels, splits, fingerprint=config_fingerprint(cfg), jobs=jobs
    )


SWEEPABLE = ("k", "embed_dim", "fusion_weight")


def sensitivity_sweep(
    graph: Graph,
    base_config: TrainConfig,
    param: str,
    grid,
    splits,
    jobs: int = 1,
) -> list[dict]:
    """Accuracy (and positive correct ratio) per grid point of one knob.

    The fusion weight only enters the final blend, so its sweep reuses one
    trained model; k and embed_dim retrain per point.
    """
    if param not in SWEEPABLE:
        raise ValueError(f"param must be one of {SWEEPABLE}, got {param!r}")
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid is empty")

    rows = []
    if param == "fusion_weight":
        result = train(graph, base_config)
        ratio = trained_correct_ratio(graph, result.h_theta, result.h_phi, base_config)
        for value in grid:
            fused = combine_embeddings(result.h_theta, result.h_phi, value)
            stats = evaluate_over_splits(fused, graph.labels, splits, jobs=jobs)
            rows.append(_sweep_row(param, value, stats, ratio))
    else:
        for value in grid:
            cfg = replace(base_config, **{param: value})
            result = train(graph, cfg)
            fused = combine_embeddings(result.h_theta, result.h_phi, cfg.fusion_weight)
            stats = evaluate_over_splits(fused, graph.labels, splits, jobs=jobs)
            ratio = trained_correct_ratio(graph, result.h_theta, result.h_phi, cfg)
            rows.append(_sweep_row(param, value, stats, ratio))
    return rows


def _sweep_row(param: str, value, stats: EvalResult, ratio) -> dict:
    return {
        "param": param,
        "value": value,
        "mean_accuracy": stats.mean,
        "std_accuracy": stats.std,
        "correct_ratio": ratio,
    }


def trained_correct_ratio(
    graph: Graph, h_theta: np.ndarray, h_phi: np.ndarray, config: TrainConfig
) -> float | None:
    """Positive correct ratio of the consensus sets built from embeddings."""
    if graph.labels is None:
        return None
    b_theta = cosine_knn(h_theta, config.k)
    b_phi = cosine_knn(h_phi, config.k)
    topo = (
        None
        if config.variant == "no_topology"
        else topological_knn(graph.adjacency(), config.k)
    )
    sets = build_pairs(b_theta, b_phi, topo, config.k)
    return positive_correct_ratio(sets.positives, graph.labels)


def pca_project(h: np.ndarray, dims: int = 2) -> np.ndarray:
    """Project onto the top principal components of the centered data.

    Sign convention: each component's largest-magnitude loading is made
    positive, so the projection is fully deterministic.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] < 2:
        raise ValueError(f"PCA needs at least 2 rows, got {h.shape[0]}")
    if h.shape[1] < dims:
        raise ValueError(f"cannot extract {dims} components from {h.shape[1]} columns")
    centered = h - h.mean(axis=0, keepdims=True)
    cov = centered.T @ centered / h.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    components = eigvecs[:, ::-1][:, :dims]
    for c in range(dims):
        lead = np.abs(components[:, c]).argmax()
        if components[lead, c] < 0:
            components[:, c] = -components[:, c]
    return centered @ components
