"""Full training loop: encode, mine pairs, contrast, step; then fuse.

Each epoch re-encodes the whole graph with both encoders, rebuilds the
embedding k-NN views from those fresh embeddings (the topological view is
static and cached), evaluates the contrastive objective on the tape, and
applies one Adam update. Final embeddings come from a deterministic
eval-mode pass.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import linear_attention
from .gcn import GcnParams, gcn_forward, init_gcn_params
from .graphdata import Graph, normalize_adjacency
from .linear_attention import AttnParams, init_attn_params, attention_encoder_forward
from .loss import ConfigError, total_loss
from .numcore import Tape, Tensor, backward, l2_normalize_rows, row_l2_normalize
from .sampling import NeighborSets, build_pairs, cosine_knn, topological_knn

VARIANTS = ("full", "no_topology", "dual_gcn", "dual_transformer")


class TrainingDiverged(RuntimeError):
    """Loss left the finite range; carries a diagnostic snapshot."""

    def __init__(self, epoch: int, loss_value: float):
        super().__init__(f"non-finite loss {loss_value!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss_value = loss_value


@dataclass
class TrainConfig:
    k: int
    embed_dim: int
    fusion_weight: float = 0.7
    learning_rate: float = 0.01
    epochs: int = 400
    tau_cl: float = 0.5
    tau_attn: float = 0.25
    num_random_features: int = 64
    hidden_dim: int | None = None
    attn_layers: int = 2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.0
    early_stop_patience: int | None = 50
    early_stop_min_delta: float = 1e-6
    init_seed: int = 0
    gumbel_seed: int = 0
    variant: str = "full"

    def validate(self, n_nodes: int | None = None) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if n_nodes is not None and self.k >= n_nodes:
            raise ConfigError(f"k={self.k} must be below the node count {n_nodes}")
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be positive, got {self.embed_dim}")
        if not (0.0 <= self.fusion_weight <= 1.0):
            raise ConfigError(
                f"fusion weight must lie in [0, 1], got {self.fusion_weight}"
            )
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.tau_cl <= 0 or self.tau_attn <= 0:
            raise ConfigError("temperatures must be positive")
        if self.num_random_features < 1:
            raise ConfigError("need at least one random feature")
        if self.attn_layers < 1:
            raise ConfigError("need at least one attention layer")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")

    @property
    def effective_hidden(self) -> int:
        return self.hidden_dim if self.hidden_dim is not None else self.embed_dim

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**data)


def config_fingerprint(config: TrainConfig) -> str:
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class TrainReport:
    losses: list[float] = field(default_factory=list)
    positive_stats: list[dict] = field(default_factory=list)
    epochs_run: int = 0
    wall_clock_s: float = 0.0
    underflow_clamps: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EncoderState:
    """One encoder slot; `kind` picks the forward rule."""

    kind: str  # "gcn" | "attn"
    params: GcnParams | AttnParams

    def forward(self, x: Tensor, a_hat: Tensor, mode: str, rng) -> Tensor:
        if self.kind == "gcn":
            return gcn_forward(x, a_hat, self.params)
        return attention_encoder_forward(x, self.params, mode=mode, rng=rng)

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.{k}": v for k, v in self.params.named().items()}

    def replaced(self, prefix: str, named: dict[str, Tensor]) -> "EncoderState":
        strip = len(prefix) + 1
        local = {k[strip:]: v for k, v in named.items() if k.startswith(prefix + ".")}
        return EncoderState(kind=self.kind, params=self.params.replaced(local))


@dataclass
class TrainResult:
    h_theta: np.ndarray
    h_phi: np.ndarray
    report: TrainReport
    encoders: tuple[EncoderState, EncoderState]
    config: TrainConfig


class Adam:
    """Standard Adam with optional plain L2 weight decay on the gradient."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(
        self, params: dict[str, Tensor], grads: dict[str, np.ndarray]
    ) -> dict[str, Tensor]:
        self.t += 1
        updated = {}
        for name, tensor in params.items():
            g = grads[name]
            if self.weight_decay:
                g = g + self.weight_decay * tensor.data
            m = self._m.get(name)
            v = self._v.get(name)
            if m is None:
                m = np.zeros_like(g)
                v = np.zeros_like(g)
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * g * g
            self._m[name] = m
            self._v[name] = v
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            new_data = tensor.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            updated[name] = Tensor(new_data, requires_grad=True)
        return updated


def _encoder_kinds(variant: str) -> tuple[str, str]:
    if variant == "dual_gcn":
        return ("gcn", "gcn")
    if variant == "dual_transformer":
        return ("attn", "attn")
    return ("gcn", "attn")


def _init_encoder(kind: str, graph: Graph, config: TrainConfig, seed: int) -> EncoderState:
    hidden = config.effective_hidden
    if kind == "gcn":
        params = init_gcn_params(graph.num_features, hidden, config.embed_dim, seed)
    else:
        params = init_attn_params(
            graph.num_features,
            hidden,
            config.embed_dim,
            config.attn_layers,
            config.num_random_features,
            config.tau_attn,
            seed,
        )
    return EncoderState(kind=kind, params=params)


def train(graph: Graph, config: TrainConfig) -> TrainResult:
    """Run the whole self-supervised loop and return eval-mode embeddings."""
    config.validate(n_nodes=graph.n)
    started = time.perf_counter()
    linear_attention.reset_underflow_count()

    a_hat = Tensor(normalize_adjacency(graph.adjacency()))
    x = Tensor(graph.x)
    kinds = _encoder_kinds(config.variant)
    theta = _init_encoder(kinds[0], graph, config, config.init_seed)
    phi = _init_encoder(kinds[1], graph, config, config.init_seed + 1)

    topo = (
        None
        if config.variant == "no_topology"
        else topological_knn(graph.adjacency(), config.k)
    )
    gumbel_rng = np.random.default_rng(config.gumbel_seed)
    optimizer = Adam(
        lr=config.learning_rate,
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        eps=config.adam_eps,
        weight_decay=config.weight_decay,
    )

    report = TrainReport()
    best_loss = np.inf
    best_epoch = 0
    for epoch in range(config.epochs):
        with Tape() as tape:
            h_theta = theta.forward(x, a_hat, "train", gumbel_rng)
            h_phi = phi.forward(x, a_hat, "train", gumbel_rng)
            sets = _epoch_neighbor_sets(h_theta, h_phi, topo, config)
            loss = total_loss(
                row_l2_normalize(h_theta),
                row_l2_normalize(h_phi),
                sets.positives,
                config.tau_cl,
            )
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(epoch, value)
            grads = backward(loss, tape)

        params = {**theta.named("theta"), **phi.named("phi")}
        grads_by_name = {
            name: grads.get(t, np.zeros(t.shape)) for name, t in params.items()
        }
        params = optimizer.step(params, grads_by_name)
        theta = theta.replaced("theta", params)
        phi = phi.replaced("phi", params)

        sizes = sets.positive_sizes()
        report.losses.append(value)
        report.positive_stats.append(
            {
                "mean": float(sizes.mean()),
                "min": int(sizes.min()),
                "max": int(sizes.max()),
            }
        )
        report.epochs_run = epoch + 1

        if value < best_loss - config.early_stop_min_delta:
            best_loss = value
            best_epoch = epoch
        patience = config.early_stop_patience
        if patience is not None and epoch - best_epoch >= patience:
            break

    h_theta_eval = theta.forward(x, a_hat, "eval", None)
    h_phi_eval = phi.forward(x, a_hat, "eval", None)
    report.wall_clock_s = time.perf_counter() - started
    report.underflow_clamps = linear_attention.underflow_count()
    return TrainResult(
        h_theta=h_theta_eval.data.copy(),
        h_phi=h_phi_eval.data.copy(),
        report=report,
        encoders=(theta, phi),
        config=config,
    )


def _epoch_neighbor_sets(
    h_theta: Tensor, h_phi: Tensor, topo, config: TrainConfig
) -> NeighborSets:
    b_theta = cosine_knn(h_theta.data, config.k)
    b_phi = cosine_knn(h_phi.data, config.k)
    return build_pairs(b_theta, b_phi, topo, config.k)


def combine_embeddings(
    h_theta: np.ndarray, h_phi: np.ndarray, fusion_weight: float
) -> np.ndarray:
    """Row-normalize each view, then blend: w * theta + (1 - w) * phi."""
    if not (0.0 <= fusion_weight <= 1.0):
        raise ConfigError(f"fusion weight must lie in [0, 1], got {fusion_weight}")
    if h_theta.shape != h_phi.shape:
        raise ValueError(f"shape mismatch: {h_theta.shape} vs {h_phi.shape}")
    return fusion_weight * l2_normalize_rows(h_theta) + (
        1.0 - fusion_weight
    ) * l2_normalize_rows(h_phi)


CHECKPOINT_MAGIC = b"DGCK"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, result: TrainResult) -> None:
    """JSON header plus a flat little-endian float64 blob, versioned."""
    arrays: dict[str, np.ndarray] = {}
    for prefix, enc in zip(("theta", "phi"), result.encoders):
        for name, tensor in enc.named(prefix).items():
            arrays[name] = tensor.data
        if enc.kind == "attn":
            arrays[f"{prefix}.random_features"] = enc.params.random_features

    entries = []
    offset = 0
    blob_parts = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        entries.append(
            {"name": name, "rows": arr.shape[0], "cols": arr.shape[1], "offset": offset}
        )
        blob_parts.append(arr.tobytes())
        offset += arr.nbytes
    header = {
        "version": CHECKPOINT_VERSION,
        "kinds": [enc.kind for enc in result.encoders],
        "config": result.config.to_dict(),
        "tensors": entries,
        "blob_bytes": offset,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for part in blob_parts:
            fh.write(part)


class CheckpointError(RuntimeError):
    pass


def load_checkpoint(path) -> tuple[TrainConfig, tuple[EncoderState, EncoderState]]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        version, header_len = struct.unpack("<IQ", fh.read(12))
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}"
            )
        header = json.loads(fh.read(header_len).decode())
        blob = fh.read(header["blob_bytes"])

    arrays = {}
    for entry in header["tensors"]:
        count = entry["rows"] * entry["cols"]
        flat = np.frombuffer(blob, dtype="<f8", count=count, offset=entry["offset"])
        arrays[entry["name"]] = flat.reshape(entry["rows"], entry["cols"]).copy()

    config = TrainConfig.from_dict(header["config"])
    encoders = []
    for prefix, kind in zip(("theta", "phi"), header["kinds"]):
        local = {
            k[len(prefix) + 1 :]: v
            for k, v in arrays.items()
            if k.startswith(prefix + ".")
        }
        if kind == "gcn":
            params = GcnParams(
                w0=Tensor(local["w0"], requires_grad=True),
                w1=Tensor(local["w1"], requires_grad=True),
            )
        else:
            n_layers = sum(1 for k in local if k.endswith(".wq"))
            from .linear_attention import AttnLayer

            params = AttnParams(
                w_in=Tensor(local["w_in"], requires_grad=True),
                layers=tuple(
                    AttnLayer(
                        wq=Tensor(local[f"layer{i}.wq"], requires_grad=True),
                        wk=Tensor(local[f"layer{i}.wk"], requires_grad=True),
                        wv=Tensor(local[f"layer{i}.wv"], requires_grad=True),
                    )
                    for i in range(n_layers)
                ),
                w_out=Tensor(local["w_out"], requires_grad=True),
                random_features=local["random_features"],
                tau_attn=config.tau_attn,
            )
        encoders.append(EncoderState(kind=kind, params=params))
    return config, (encoders[0], encoders[1])


def eval_embeddings(
    graph: Graph, encoders: tuple[EncoderState, EncoderState]
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic eval-mode forward of both encoders on a graph."""
    a_hat = Tensor(normalize_adjacency(graph.adjacency()))
    x = Tensor(graph.x)
    h_theta = encoders[0].forward(x, a_hat, "eval", None)
    h_phi = encoders[1].forward(x, a_hat, "eval", None)
    return h_theta.data.copy(), h_phi.data.copy()
