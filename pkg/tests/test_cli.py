import csv
import time
import hashlib
import json

import numpy as np
import pytest

from duograph.cli import main


def _write_config(path, dataset=None, train=None, splits=None):
    config = {
        "dataset": dataset
        or {
            "kind": "sbm",
            "block_sizes": [12, 12],
            "p_in": 0.4,
            "p_out": 0.05,
            "feature_dim": 5,
            "feature_shift": 1.5,
            "seed": 4,
        },
        "train": train
        or {
            "k": 5,
            "embed_dim": 6,
            "epochs": 3,
            "num_random_features": 8,
            "early_stop_patience": None,
            "init_seed": 1,
            "gumbel_seed": 1,
        },
        "splits": splits or {"train_per_class": 5, "val_per_class": 3, "count": 2},
    }
    path.write_text(json.dumps(config))
    return path


def test_gen_sbm_writes_dataset(tmp_path, capsys):
    config = _write_config(tmp_path / "c.json")
    assert main(["gen-sbm", "--config", str(config), "--out", str(tmp_path / "data")]) == 0
    header = json.loads((tmp_path / "data" / "sbm.header.json").read_text())
    assert header["n"] == 24 and header["f"] == 5
    assert (tmp_path / "data" / header["edges"]).exists()
    assert "wrote" in capsys.readouterr().out


def test_train_writes_checkpoint_and_report(tmp_path):
    config = _write_config(tmp_path / "c.json")
    before = config.read_bytes()
    out = tmp_path / "run"
    started = time.perf_counter()
    assert main(["train", "--config", str(config), "--out", str(out)]) == 0
    assert time.perf_counter() - started < 60.0  # desk-scale smoke budget
    report = json.loads((out / "train_report.json").read_text())
    assert len(report["losses"]) == 3
    assert (out / "model.ckpt").exists()
    assert config.read_bytes() == before  # inputs are never mutated


def test_train_rerun_identical_checkpoint_hash(tmp_path):
    config = _write_config(tmp_path / "c.json")
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["train", "--config", str(config), "--out", str(out)]) == 0
        digests.append(hashlib.sha256((out / "model.ckpt").read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_eval_roundtrip(tmp_path):
    config = _write_config(tmp_path / "c.json")
    run = tmp_path / "run"
    assert main(["train", "--config", str(config), "--out", str(run)]) == 0
    out = tmp_path / "eval"
    code = main(
        [
            "eval",
            "--config",
            str(config),
            "--checkpoint",
            str(run / "model.ckpt"),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    result = json.loads((out / "eval_result.json").read_text())
    assert len(result["accuracies"]) == 2
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2


def test_eval_rejects_mismatched_config(tmp_path):
    config = _write_config(tmp_path / "c.json")
    run = tmp_path / "run"
    assert main(["train", "--config", str(config), "--out", str(run)]) == 0
    other = _write_config(
        tmp_path / "other.json",
        train={"k": 4, "embed_dim": 6, "epochs": 3, "num_random_features": 8},
    )
    code = main(
        [
            "eval",
            "--config",
            str(other),
            "--checkpoint",
            str(run / "model.ckpt"),
            "--out",
            str(tmp_path / "x"),
        ]
    )
    assert code == 3


def test_analyze_without_checkpoint(tmp_path):
    config = _write_config(tmp_path / "c.json")
    out = tmp_path / "analysis"
    assert main(["analyze", "--config", str(config), "--out", str(out)]) == 0
    payload = json.loads((out / "analysis.json").read_text())
    assert payload["correct_ratio"]["consensus"] is None or (
        0.0 <= payload["correct_ratio"]["consensus"] <= 1.0
    )
    with open(out / "pca.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 24
    assert set(rows[0]) == {"node", "pc1", "pc2", "label"}


def test_sweep_emits_one_row_per_grid_point(tmp_path):
    config = _write_config(tmp_path / "c.json")
    out = tmp_path / "sweep"
    code = main(
        [
            "sweep",
            "--config",
            str(config),
            "--out",
            str(out),
            "--param",
            "fusion_weight",
            "--grid",
            "0,0.5,1",
        ]
    )
    assert code == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert [float(r["value"]) for r in rows] == [0.0, 0.5, 1.0]


def test_ablate_subset(tmp_path):
    config = _write_config(tmp_path / "c.json")
    out = tmp_path / "ablate"
    code = main(
        [
            "ablate",
            "--config",
            str(config),
            "--out",
            str(out),
            "--variants",
            "full,no_topology",
        ]
    )
    assert code == 0
    rows = json.loads((out / "ablation.json").read_text())
    assert [r["variant"] for r in rows] == ["full", "no_topology"]


def test_unknown_config_keys_exit_2(tmp_path, capsys):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"dataset": {"kind": "sbm"}, "train": {}, "typo": 1}))
    assert main(["train", "--config", str(config), "--out", str(tmp_path / "o")]) == 2
    assert "typo" in capsys.readouterr().err


def test_missing_dataset_file_exit_2_names_path(tmp_path, capsys):
    config = _write_config(
        tmp_path / "c.json", dataset={"kind": "files", "header": "nowhere/h.json"}
    )
    assert main(["train", "--config", str(config), "--out", str(tmp_path / "o")]) == 2
    assert "nowhere/h.json" in capsys.readouterr().err


def test_missing_config_file_exit_2(tmp_path):
    assert (
        main(["train", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)])
        == 2
    )


def test_invalid_train_values_exit_2(tmp_path):
    config = _write_config(
        tmp_path / "c.json",
        train={"k": 5, "embed_dim": 6, "fusion_weight": 2.0},
    )
    assert main(["train", "--config", str(config), "--out", str(tmp_path / "o")]) == 2


def test_seed_override_changes_model(tmp_path):
    config = _write_config(tmp_path / "c.json")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["train", "--config", str(config), "--out", str(out_a)]) == 0
    assert main(
        ["train", "--config", str(config), "--out", str(out_b), "--seed", "99"]
    ) == 0
    assert (out_a / "model.ckpt").read_bytes() != (out_b / "model.ckpt").read_bytes()


def test_files_dataset_roundtrip_through_cli(tmp_path):
    config = _write_config(tmp_path / "gen.json")
    data_dir = tmp_path / "data"
    assert main(["gen-sbm", "--config", str(config), "--out", str(data_dir)]) == 0

    files_config = _write_config(
        tmp_path / "files.json",
        dataset={"kind": "files", "header": str(data_dir / "sbm.header.json")},
    )
    out = tmp_path / "run"
    assert main(["train", "--config", str(files_config), "--out", str(out)]) == 0
    assert (out / "model.ckpt").exists()
