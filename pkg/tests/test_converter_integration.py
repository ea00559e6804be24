"""Round trip across the component boundary: convert an archive with the
TypeScript converter, then load the result through the plain-text loader
and check the counts against the printed manifest."""

import json
import shutil
import subprocess
from pathlib import Path

import pytest

from duograph.graphdata import load_dataset

CONVERTER_MAIN = Path(__file__).resolve().parents[1] / "converter" / "dist" / "src" / "main.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not CONVERTER_MAIN.exists(),
    reason="node or the built converter (converter/dist) is unavailable",
)


def _write_citation_fixture(d: Path) -> None:
    (d / "toy.content").write_text(
        "p1 1.0 0.0 0.5 beta\n"
        "p2 0.0 1.0 0.25 alpha\n"
        "p3 1.0 1.0 0.0 beta\n"
        "p4 0.5 0.5 1.0 gamma\n"
    )
    (d / "toy.cites").write_text("p1 p2\np2 p1\np1 p3\np4 p1\n")


def test_convert_then_load_round_trip(tmp_path):
    source = tmp_path / "archive"
    source.mkdir()
    _write_citation_fixture(source)
    out = tmp_path / "converted"

    proc = subprocess.run(
        ["node", str(CONVERTER_MAIN), str(source), str(out), "--name", "toy"],
        capture_output=True,
        text=True,
        check=True,
    )
    manifest = json.loads(proc.stdout)

    graph = load_dataset(out / manifest["files"]["header"])
    assert graph.n == manifest["nodes"]
    assert graph.num_features == manifest["features"]
    assert graph.num_classes == manifest["classes"]
    assert graph.directed_edge_count == manifest["directedEdges"]


@pytest.mark.parametrize("compressed", [False, True])
def test_numpy_written_npz_round_trip(tmp_path, compressed):
    """The converter must read archives produced by the reference writer."""
    import numpy as np

    arrays = {
        # 4-node graph stored upper-triangular: edges 0-1, 1-2, 1-3
        "adj_shape": np.array([4, 4], dtype=np.int64),
        "adj_indptr": np.array([0, 1, 3, 3, 3], dtype=np.int32),
        "adj_indices": np.array([1, 2, 3], dtype=np.int32),
        "adj_data": np.ones(3, dtype=np.float32),
        "attr_shape": np.array([4, 2], dtype=np.int64),
        "attr_indptr": np.array([0, 1, 2, 3, 4], dtype=np.int32),
        "attr_indices": np.array([0, 1, 0, 1], dtype=np.int32),
        "attr_data": np.array([1.5, 2.5, 3.5, 4.5], dtype=np.float32),
        "labels": np.array([0, 0, 1, 1], dtype=np.int64),
    }
    archive = tmp_path / "toy_products.npz"
    if compressed:
        np.savez_compressed(archive, **arrays)
    else:
        np.savez(archive, **arrays)

    out = tmp_path / "converted"
    proc = subprocess.run(
        ["node", str(CONVERTER_MAIN), str(archive), str(out), "--name", "toy"],
        capture_output=True,
        text=True,
        check=True,
    )
    manifest = json.loads(proc.stdout)
    assert manifest["nodes"] == 4
    assert manifest["directedEdges"] == 6
    assert manifest["classes"] == 2

    graph = load_dataset(out / manifest["files"]["header"])
    assert graph.edges == ((0, 1), (1, 2), (1, 3))
    assert graph.x[0][0] == pytest.approx(1.5)
    assert list(graph.labels) == [0, 0, 1, 1]


def test_converter_rejects_unknown_layout(tmp_path):
    bogus = tmp_path / "data.parquet"
    bogus.write_text("nope")
    proc = subprocess.run(
        ["node", str(CONVERTER_MAIN), str(bogus), str(tmp_path / "out")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert "supported layouts" in proc.stderr
