"""NDJSON corpus round-tripping, streaming, and snapshot JSON."""

from __future__ import annotations

import inspect
import json

import pytest

from subscenes.builder import WorldSnapshot
from subscenes.corpus import (
    SchemaViolationError,
    load_corpus,
    load_snapshots,
    save_corpus,
    scene_from_dict,
    scene_to_dict,
    scene_to_json,
    snapshot_from_dict,
    snapshot_to_dict,
)
from subscenes.generator import GeneratorSpec, generate
from subscenes.graph import EdgeKind, NodeKind
from conftest import chain_graph, object_attrs


def _sample_graphs(count=20, seed=5):
    spec = GeneratorSpec(seed=seed, count=count)
    return [scene.graph for scene in generate(spec)]


def test_scene_dict_round_trip(three_chain):
    data = scene_to_dict(three_chain)
    again = scene_from_dict(data)
    assert three_chain.structurally_equal(again)
    assert scene_to_dict(again) == data


def test_scene_dict_preserves_pairs():
    builder = chain_graph(2)
    builder.add_node("o", NodeKind.OBJECT, object_attrs(distance=(4.25, -1.5)))
    builder.add_edge("o", EdgeKind.ON, "L1")
    graph = builder.build()
    again = scene_from_dict(scene_to_dict(graph))
    assert again.node("o").attributes["distance"] == (4.25, -1.5)


def test_corpus_round_trip(tmp_path):
    graphs = _sample_graphs(100)
    path = tmp_path / "corpus.ndjson"
    assert save_corpus(path, graphs) == 100
    loaded = list(load_corpus(path))
    assert len(loaded) == 100
    for original, again in zip(graphs, loaded):
        assert original.structurally_equal(again)


def test_corpus_bytes_are_canonical(tmp_path):
    graphs = _sample_graphs(5)
    a, b = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    save_corpus(a, graphs)
    save_corpus(b, (scene_from_dict(scene_to_dict(g)) for g in graphs))
    assert a.read_bytes() == b.read_bytes()


def test_malformed_line_reports_line_number(tmp_path):
    graphs = _sample_graphs(8)
    lines = [scene_to_json(g) for g in graphs]
    lines[6] = '{"scene_id": "broken"'
    path = tmp_path / "bad.ndjson"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(SchemaViolationError) as excinfo:
        list(load_corpus(path))
    assert excinfo.value.line_no == 7


def test_schema_violation_on_valid_json_bad_scene(tmp_path):
    path = tmp_path / "bad.ndjson"
    path.write_text('{"scene_id": "x", "timestamp_us": 0, "nodes": [], "edges": [], "root_id": "r"}\n')
    with pytest.raises(SchemaViolationError) as excinfo:
        list(load_corpus(path))
    assert excinfo.value.line_no == 1


def test_root_id_mismatch_rejected(tmp_path):
    graph = chain_graph(2).build()
    data = scene_to_dict(graph)
    data["root_id"] = "L0"  # ego sits on L1
    path = tmp_path / "bad.ndjson"
    path.write_text(json.dumps(data) + "\n")
    with pytest.raises(SchemaViolationError):
        list(load_corpus(path))


def test_empty_file_is_empty_corpus(tmp_path):
    path = tmp_path / "empty.ndjson"
    path.write_text("")
    assert list(load_corpus(path)) == []


def test_load_is_streaming(tmp_path):
    """Loading yields scenes lazily: a late bad line only fails when reached."""
    graphs = _sample_graphs(5)
    lines = [scene_to_json(g) for g in graphs]
    lines.append("not json")
    path = tmp_path / "tail.ndjson"
    path.write_text("\n".join(lines) + "\n")
    stream = load_corpus(path)
    assert inspect.isgenerator(stream)
    for _ in range(5):
        next(stream)
    with pytest.raises(SchemaViolationError):
        next(stream)


def test_snapshot_json_round_trip():
    spec = GeneratorSpec(seed=9, count=6)
    for scene in generate(spec):
        data = snapshot_to_dict(scene.snapshot)
        again = snapshot_from_dict(json.loads(json.dumps(data)))
        assert isinstance(again, WorldSnapshot)
        assert snapshot_to_dict(again) == data


def test_load_snapshots_single_json(tmp_path):
    spec = GeneratorSpec(seed=9, count=1)
    snapshot = next(generate(spec)).snapshot
    path = tmp_path / "snap.json"
    path.write_text(json.dumps(snapshot_to_dict(snapshot)))
    loaded = list(load_snapshots(path))
    assert len(loaded) == 1
    assert snapshot_to_dict(loaded[0]) == snapshot_to_dict(snapshot)


def test_load_snapshots_ndjson(tmp_path):
    spec = GeneratorSpec(seed=9, count=4)
    snapshots = [scene.snapshot for scene in generate(spec)]
    path = tmp_path / "snaps.ndjson"
    path.write_text(
        "\n".join(json.dumps(snapshot_to_dict(s)) for s in snapshots) + "\n"
    )
    loaded = list(load_snapshots(path))
    assert len(loaded) == 4


def test_load_snapshots_bad_entry(tmp_path):
    path = tmp_path / "snaps.ndjson"
    path.write_text('{"ego": {}}\n')
    with pytest.raises(SchemaViolationError):
        list(load_snapshots(path))
