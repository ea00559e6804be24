"""Graph container, adjacency normalization, plain-text IO, SBM generation, splits.

On-disk dataset format (all plain text, 0-based node indices):
  edges     one "i j" pair per line, whitespace separated
  features  one row of space-separated decimals per node
  labels    one integer per line (optional)
  header    JSON with n, f, c and the three file names
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GraphFormatError(ValueError):
    """Malformed dataset file; message carries the file and line number."""


class GraphValidationError(ValueError):
    """Structurally well-formed input that violates a graph constraint."""


@dataclass(frozen=True)
class Graph:
    """Undirected graph with dense features and optional node labels.

    `edges` holds each undirected edge once as (i, j) with i < j; the
    directed-pair count reported to match dataset-statistics conventions
    is twice that.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    x: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.x.shape[0] != self.n:
            raise GraphValidationError(
                f"feature matrix has {self.x.shape[0]} rows for {self.n} nodes"
            )
        if self.labels is not None and len(self.labels) != self.n:
            raise GraphValidationError(
                f"{len(self.labels)} labels for {self.n} nodes"
            )

    @property
    def num_features(self) -> int:
        return self.x.shape[1]

    @property
    def num_classes(self) -> int:
        if self.labels is None:
            return 0
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    @property
    def directed_edge_count(self) -> int:
        return 2 * len(self.edges)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency with a zero diagonal."""
        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i, j] = 1.0
            a[j, i] = 1.0
        return a


@dataclass(frozen=True)
class SplitSet:
    """Disjoint train/val/test node index lists for one evaluation split."""

    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        pools = [set(self.train), set(self.val), set(self.test)]
        total = len(self.train) + len(self.val) + len(self.test)
        if len(pools[0] | pools[1] | pools[2]) != total:
            raise GraphValidationError("split sets overlap")


def normalize_adjacency(a: np.ndarray) -> np.ndarray:
    """Symmetric normalization with self-loops: D^-1/2 (A + I) D^-1/2."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] != a.shape[1]:
        raise GraphValidationError(f"adjacency must be square, got {a.shape}")
    with_loops = a + np.eye(a.shape[0])
    inv_sqrt_deg = 1.0 / np.sqrt(with_loops.sum(axis=1))
    return with_loops * inv_sqrt_deg[:, None] * inv_sqrt_deg[None, :]


def _canonical_edges(raw_pairs, n: int, source: str) -> tuple[tuple[int, int], ...]:
    """Symmetrize, dedupe, and drop self-loops; validate index range."""
    edges = set()
    for i, j in raw_pairs:
        if not (0 <= i < n and 0 <= j < n):
            raise GraphValidationError(
                f"{source}: edge ({i}, {j}) out of range for {n} nodes"
            )
        if i == j:
            continue
        edges.add((i, j) if i < j else (j, i))
    return tuple(sorted(edges))


def load_graph(feature_file, edge_file, label_file=None) -> Graph:
    """Read the plain-text dataset files into a Graph.

    Duplicate and reversed edge lines collapse to one undirected edge;
    raw self-loops are dropped (normalization re-adds exactly one).
    """
    features = _read_features(Path(feature_file))
    n = features.shape[0]
    raw_pairs = _read_edges(Path(edge_file))
    edges = _canonical_edges(raw_pairs, n, str(edge_file))
    labels = None
    if label_file is not None:
        labels = _read_labels(Path(label_file), n)
    return Graph(n=n, edges=edges, x=features, labels=labels)


def _read_features(path: Path) -> np.ndarray:
    rows = []
    width = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise GraphFormatError(f"{path}:{lineno}: {exc}") from exc
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise GraphFormatError(
                f"{path}:{lineno}: expected {width} values, got {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise GraphFormatError(f"{path}: no feature rows")
    return np.array(rows, dtype=np.float64)


def _read_edges(path: Path) -> list[tuple[int, int]]:
    pairs = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        toks = line.split()
        if len(toks) != 2:
            raise GraphFormatError(
                f"{path}:{lineno}: expected 'i j', got {line.strip()!r}"
            )
        try:
            pairs.append((int(toks[0]), int(toks[1])))
        except ValueError as exc:
            raise GraphFormatError(f"{path}:{lineno}: {exc}") from exc
    return pairs


def _read_labels(path: Path, n: int) -> np.ndarray:
    values = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            values.append(int(line.strip()))
        except ValueError as exc:
            raise GraphFormatError(f"{path}:{lineno}: {exc}") from exc
    if len(values) != n:
        raise GraphValidationError(f"{path}: {len(values)} labels for {n} nodes")
    labels = np.array(values, dtype=np.int64)
    if labels.min() < 0:
        raise GraphValidationError(f"{path}: negative label")
    return labels


def load_dataset(header_file) -> Graph:
    """Load via the JSON header and cross-check the recorded counts."""
    header_path = Path(header_file)
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{header_path}: {exc}") from exc
    for key in ("n", "f", "features", "edges"):
        if key not in header:
            raise GraphFormatError(f"{header_path}: missing key {key!r}")
    base = header_path.parent
    graph = load_graph(
        base / header["features"],
        base / header["edges"],
        base / header["labels"] if header.get("labels") else None,
    )
    if graph.n != header["n"] or graph.num_features != header["f"]:
        raise GraphValidationError(
            f"{header_path}: header says n={header['n']}, f={header['f']}; "
            f"files contain n={graph.n}, f={graph.num_features}"
        )
    if header.get("c") and graph.labels is not None:
        if graph.num_classes > header["c"]:
            raise GraphValidationError(
                f"{header_path}: label {graph.num_classes - 1} outside {header['c']} classes"
            )
    return graph


def save_dataset(graph: Graph, out_dir, name: str = "graph") -> Path:
    """Write the plain-text files plus header; returns the header path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    feat_name, edge_name, label_name = (
        f"{name}.features.txt",
        f"{name}.edges.txt",
        f"{name}.labels.txt",
    )
    with open(out / feat_name, "w") as fh:
        for row in graph.x:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    with open(out / edge_name, "w") as fh:
        for i, j in graph.edges:
            fh.write(f"{i} {j}\n")
    header = {
        "n": graph.n,
        "f": graph.num_features,
        "c": graph.num_classes,
        "features": feat_name,
        "edges": edge_name,
        "labels": None,
    }
    if graph.labels is not None:
        with open(out / label_name, "w") as fh:
            for v in graph.labels:
                fh.write(f"{int(v)}\n")
        header["labels"] = label_name
    header_path = out / f"{name}.header.json"
    header_path.write_text(json.dumps(header, indent=2) + "\n")
    return header_path


def generate_sbm(
    block_sizes: list[int],
    p_in: float,
    p_out: float,
    feature_dim: int,
    feature_shift: float,
    seed: int = 0,
) -> Graph:
    """Stochastic block model with Gaussian features.

    Block b gets feature mean `feature_shift * u_b` for a seeded random
    unit direction u_b, so the raw-feature class signal is tunable
    independently of the topology signal.
    """
    if not block_sizes or min(block_sizes) <= 0:
        raise GraphValidationError("block sizes must be positive")
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise GraphValidationError("edge probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n = sum(block_sizes)
    labels = np.repeat(np.arange(len(block_sizes)), block_sizes)

    upper = rng.random((n, n))
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    hit = np.triu(upper < prob, k=1)
    sources, targets = np.nonzero(hit)
    edges = tuple((int(i), int(j)) for i, j in zip(sources, targets))

    directions = rng.standard_normal((len(block_sizes), feature_dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    x = rng.standard_normal((n, feature_dim)) + feature_shift * directions[labels]
    return Graph(n=n, edges=edges, x=x, labels=labels)


def make_splits(
    graph: Graph,
    train_per_class: int,
    val_size: int | None = None,
    val_per_class: int | None = None,
    seed: int = 0,
) -> SplitSet:
    """Sample one split: fixed train nodes per class, then validation either
    as a fixed-size pool or per class, remainder to test."""
    if graph.labels is None:
        raise GraphValidationError("splits need node labels")
    if (val_size is None) == (val_per_class is None):
        raise GraphValidationError("give exactly one of val_size / val_per_class")
    rng = np.random.default_rng(seed)
    labels = graph.labels
    classes = np.unique(labels)

    train: list[int] = []
    for c in classes:
        members = np.flatnonzero(labels == c)
        if len(members) < train_per_class:
            raise GraphValidationError(
                f"class {c} has {len(members)} nodes, needs {train_per_class}"
            )
        picked = rng.choice(members, size=train_per_class, replace=False)
        train.extend(int(v) for v in picked)

    taken = set(train)
    if val_per_class is not None:
        val: list[int] = []
        for c in classes:
            pool = np.array(
                [v for v in np.flatnonzero(labels == c) if v not in taken]
            )
            if len(pool) < val_per_class:
                raise GraphValidationError(
                    f"class {c} has {len(pool)} nodes left, needs {val_per_class} for val"
                )
            picked = rng.choice(pool, size=val_per_class, replace=False)
            val.extend(int(v) for v in picked)
    else:
        pool = np.array([v for v in range(graph.n) if v not in taken])
        if len(pool) < val_size:
            raise GraphValidationError(
                f"{len(pool)} nodes left for a validation pool of {val_size}"
            )
        val = [int(v) for v in rng.choice(pool, size=val_size, replace=False)]

    taken.update(val)
    test = [v for v in range(graph.n) if v not in taken]
    return SplitSet(
        train=tuple(sorted(train)),
        val=tuple(sorted(val)),
        test=tuple(sorted(test)),
        seed=seed,
    )


def make_split_series(
    graph: Graph,
    train_per_class: int,
    val_size: int | None = None,
    val_per_class: int | None = None,
    count: int = 20,
    base_seed: int = 0,
) -> list[SplitSet]:
    """Independent splits for seeds base_seed .. base_seed + count - 1."""
    return [
        make_splits(graph, train_per_class, val_size, val_per_class, seed=base_seed + s)
        for s in range(count)
    ]
