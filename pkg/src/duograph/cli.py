"""Command-line entry point: every run is a JSON config plus a subcommand.

Configs embed all seeds, so any artifact can be rebuilt from its config
file alone. Exit codes: 0 ok, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .evaluation import (
    EvalResult,
    evaluate_over_splits,
    pca_project,
    sensitivity_sweep,
    trained_correct_ratio,
)
from .graphdata import (
    Graph,
    GraphFormatError,
    GraphValidationError,
    generate_sbm,
    load_dataset,
    make_split_series,
    save_dataset,
)
from .loss import ConfigError
from .sampling import build_pairs, cosine_knn, positive_correct_ratio, topological_knn
from .trainer import (
    CheckpointError,
    TrainConfig,
    TrainingDiverged,
    combine_embeddings,
    config_fingerprint,
    eval_embeddings,
    load_checkpoint,
    save_checkpoint,
    train,
    VARIANTS,
)

CONFIG_ERRORS = (ConfigError, GraphFormatError, GraphValidationError)


class RunConfig:
    """Validated view of one config file."""

    def __init__(self, dataset: dict, train: TrainConfig, splits: dict, base_dir: Path):
        self.dataset = dataset
        self.train = train
        self.splits = splits
        self.base_dir = base_dir

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}")
        _reject_unknown(raw, {"dataset", "train", "splits"}, "config")
        if "dataset" not in raw or "train" not in raw:
            raise ConfigError(f"{path}: config needs 'dataset' and 'train' sections")
        dataset = _validate_dataset(raw["dataset"])
        train_cfg = TrainConfig.from_dict(raw["train"])
        train_cfg.validate()
        splits = _validate_splits(raw.get("splits", {}))
        return cls(dataset, train_cfg, splits, path.parent)

    def load_graph(self) -> Graph:
        if self.dataset["kind"] == "sbm":
            d = self.dataset
            return generate_sbm(
                d["block_sizes"],
                d["p_in"],
                d["p_out"],
                d["feature_dim"],
                d["feature_shift"],
                d.get("seed", 0),
            )
        header = Path(self.dataset["header"])
        if not header.is_absolute():
            header = self.base_dir / header
        if not header.exists():
            raise ConfigError(f"dataset header file not found: {header}")
        return load_dataset(header)

    def build_splits(self, graph: Graph):
        s = self.splits
        return make_split_series(
            graph,
            s["train_per_class"],
            s.get("val_size"),
            s.get("val_per_class"),
            count=s["count"],
            base_seed=s["base_seed"],
        )


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def _validate_dataset(d: dict) -> dict:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("dataset section needs a 'kind'")
    if d["kind"] == "files":
        _reject_unknown(d, {"kind", "header"}, "dataset")
        if "header" not in d:
            raise ConfigError("files dataset needs a 'header' path")
    elif d["kind"] == "sbm":
        required = {"block_sizes", "p_in", "p_out", "feature_dim", "feature_shift"}
        _reject_unknown(d, required | {"kind", "seed"}, "dataset")
        missing = required - set(d)
        if missing:
            raise ConfigError(f"sbm dataset missing keys: {sorted(missing)}")
    else:
        raise ConfigError(f"dataset kind must be 'files' or 'sbm', got {d['kind']!r}")
    return d


def _validate_splits(s: dict) -> dict:
    allowed = {"train_per_class", "val_size", "val_per_class", "count", "base_seed"}
    _reject_unknown(s, allowed, "splits")
    out = {
        "train_per_class": s.get("train_per_class", 20),
        "count": s.get("count", 20),
        "base_seed": s.get("base_seed", 0),
    }
    if "val_size" in s and "val_per_class" in s:
        raise ConfigError("give only one of val_size / val_per_class")
    if "val_size" in s:
        out["val_size"] = s["val_size"]
    else:
        out["val_per_class"] = s.get("val_per_class", 30)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def cmd_gen_sbm(args) -> int:
    cfg = RunConfig.load(args.config)
    if cfg.dataset["kind"] != "sbm":
        raise ConfigError("gen-sbm needs a dataset section of kind 'sbm'")
    graph = cfg.load_graph()
    out = Path(args.out)
    header = save_dataset(graph, out, name="sbm")
    print(f"wrote {header} ({graph.n} nodes, {graph.directed_edge_count} directed edges)")
    return 0


def cmd_train(args) -> int:
    cfg = RunConfig.load(args.config)
    train_cfg = cfg.train
    if args.seed is not None:
        train_cfg = replace(train_cfg, init_seed=args.seed, gumbel_seed=args.seed)
    graph = cfg.load_graph()
    result = train(graph, train_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "model.ckpt", result)
    _write_json(out / "train_report.json", result.report.to_dict())
    print(
        f"trained {result.report.epochs_run} epochs, "
        f"final loss {result.report.losses[-1]:.6f}, wrote {out / 'model.ckpt'}"
    )
    return 0


def _load_matching_checkpoint(cfg: RunConfig, checkpoint_path):
    ckpt_config, encoders = load_checkpoint(checkpoint_path)
    if config_fingerprint(ckpt_config) != config_fingerprint(cfg.train):
        raise CheckpointError(
            f"{checkpoint_path}: checkpoint was trained with a different config "
            f"({config_fingerprint(ckpt_config)} != {config_fingerprint(cfg.train)})"
        )
    return ckpt_config, encoders


def cmd_eval(args) -> int:
    cfg = RunConfig.load(args.config)
    graph = cfg.load_graph()
    if graph.labels is None:
        raise ConfigError("evaluation needs a labeled dataset")
    _, encoders = _load_matching_checkpoint(cfg, args.checkpoint)
    h_theta, h_phi = eval_embeddings(graph, encoders)
    fused = combine_embeddings(h_theta, h_phi, cfg.train.fusion_weight)
    splits = cfg.build_splits(graph)
    result = evaluate_over_splits(
        fused,
        graph.labels,
        splits,
        fingerprint=config_fingerprint(cfg.train),
        jobs=args.jobs,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "eval_result.json", result.to_dict())
    _write_csv(
        out / "results.csv",
        ["split", "accuracy_percent"],
        [
            {"split": i, "accuracy_percent": acc}
            for i, acc in enumerate(result.accuracies)
        ],
    )
    print(f"accuracy {result.mean:.1f} +- {result.std:.1f} over {len(splits)} splits")
    return 0


def cmd_ablate(args) -> int:
    cfg = RunConfig.load(args.config)
    graph = cfg.load_graph()
    if graph.labels is None:
        raise ConfigError("ablation needs a labeled dataset")
    variants = args.variants.split(",") if args.variants else list(VARIANTS)
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}, expected one of {VARIANTS}")
    splits = cfg.build_splits(graph)
    rows = []
    from .evaluation import ablation_run

    for variant in variants:
        result = ablation_run(graph, cfg.train, variant, splits, jobs=args.jobs)
        rows.append(
            {"variant": variant, "mean_accuracy": result.mean, "std_accuracy": result.std}
        )
        print(f"{variant}: {result.mean:.1f} +- {result.std:.1f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "ablation.json", rows)
    _write_csv(out / "ablation.csv", ["variant", "mean_accuracy", "std_accuracy"], rows)
    return 0


def cmd_sweep(args) -> int:
    cfg = RunConfig.load(args.config)
    graph = cfg.load_graph()
    if graph.labels is None:
        raise ConfigError("sweeps need a labeled dataset")
    try:
        if args.param == "fusion_weight":
            grid = [float(v) for v in args.grid.split(",")]
        else:
            grid = [int(v) for v in args.grid.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad grid {args.grid!r}: {exc}")
    splits = cfg.build_splits(graph)
    rows = sensitivity_sweep(graph, cfg.train, args.param, grid, splits, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "sweep.json", rows)
    _write_csv(
        out / "sweep.csv",
        ["param", "value", "mean_accuracy", "std_accuracy", "correct_ratio"],
        rows,
    )
    for row in rows:
        print(f"{row['param']}={row['value']}: {row['mean_accuracy']:.1f}")
    return 0


def cmd_analyze(args) -> int:
    cfg = RunConfig.load(args.config)
    graph = cfg.load_graph()
    if args.checkpoint:
        _, encoders = _load_matching_checkpoint(cfg, args.checkpoint)
    else:
        # Untrained analysis: random-init encoders straight from the seeds.
        from .trainer import _encoder_kinds, _init_encoder

        kinds = _encoder_kinds(cfg.train.variant)
        encoders = (
            _init_encoder(kinds[0], graph, cfg.train, cfg.train.init_seed),
            _init_encoder(kinds[1], graph, cfg.train, cfg.train.init_seed + 1),
        )
    h_theta, h_phi = eval_embeddings(graph, encoders)

    k = cfg.train.k
    b_theta = cosine_knn(h_theta, k)
    b_phi = cosine_knn(h_phi, k)
    topo = topological_knn(graph.adjacency(), k)
    sets = build_pairs(b_theta, b_phi, topo, k)
    sizes = sets.positive_sizes()
    payload = {
        "k": k,
        "positive_sizes": {
            "mean": float(sizes.mean()),
            "min": int(sizes.min()),
            "max": int(sizes.max()),
        },
        # Negatives are always the complement of positives + self.
        "positives": [sorted(p) for p in sets.positives],
        "correct_ratio": None,
    }
    if graph.labels is not None:
        payload["correct_ratio"] = {
            "consensus": positive_correct_ratio(sets.positives, graph.labels),
            "b_theta_only": positive_correct_ratio(sets.b_theta, graph.labels),
            "b_phi_only": positive_correct_ratio(sets.b_phi, graph.labels),
            "topology_only": positive_correct_ratio(sets.topo, graph.labels),
        }

    fused = combine_embeddings(h_theta, h_phi, cfg.train.fusion_weight)
    coords = pca_project(fused, dims=2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "analysis.json", payload)
    labels = graph.labels if graph.labels is not None else np.full(graph.n, -1)
    _write_csv(
        out / "pca.csv",
        ["node", "pc1", "pc2", "label"],
        [
            {"node": i, "pc1": float(coords[i, 0]), "pc2": float(coords[i, 1]), "label": int(labels[i])}
            for i in range(graph.n)
        ],
    )
    print(f"wrote {out / 'analysis.json'} and {out / 'pca.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duograph",
        description="Train and evaluate the dual-encoder graph contrastive pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False, checkpoint_required=False):
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel evaluation jobs")
        p.add_argument("--seed", type=int, default=None, help="override train seeds")
        if checkpoint:
            p.add_argument(
                "--checkpoint", required=checkpoint_required, help="checkpoint file"
            )

    common(sub.add_parser("gen-sbm", help="write a synthetic dataset to disk"))
    common(sub.add_parser("train", help="train and write checkpoint + report"))
    common(sub.add_parser("eval", help="evaluate a checkpoint"), True, True)
    p_ablate = sub.add_parser("ablate", help="run pipeline variants")
    common(p_ablate)
    p_ablate.add_argument(
        "--variants", default=None, help="comma-separated subset of: " + ",".join(VARIANTS)
    )
    p_sweep = sub.add_parser("sweep", help="hyperparameter sensitivity sweep")
    common(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=["k", "embed_dim", "fusion_weight"])
    p_sweep.add_argument("--grid", required=True, help="comma-separated grid values")
    common(sub.add_parser("analyze", help="positive-pair quality and PCA dumps"), True)
    return parser


COMMANDS = {
    "gen-sbm": cmd_gen_sbm,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TrainingDiverged, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
