from __future__ import annotations

import json

import pytest

from flowdialog.graph import NodeKind
from flowdialog.ingest import (
    EdgeListSchemaError,
    FlowchartValidationError,
    ground_truth_paths,
    load_edge_list,
    serialize_edge_list,
)

CAR_DOC = {
    "id": "car",
    "root": "n_open",
    "nodes": [
        {"id": "n_open", "text": "open circuit on run?"},
        {"id": "n_fuse", "text": "fuse wire blown?"},
        {"id": "n_battery", "text": "check the battery terminals"},
        {"id": "n_replace", "text": "replace the fuse wire"},
        {"id": "n_wiring", "text": "inspect the wiring for damage"},
        {"id": "t_fixed", "text": "problem solved, the circuit is restored"},
        {"id": "t_wiring", "text": "wiring repaired and tested"},
        {"id": "t_battery", "text": "battery terminals cleaned and tightened"},
    ],
    "edges": [
        {"src": "n_open", "dst": "n_fuse", "cond": "yes"},
        {"src": "n_open", "dst": "n_battery", "cond": "no"},
        {"src": "n_fuse", "dst": "n_replace", "cond": "yes"},
        {"src": "n_fuse", "dst": "n_wiring", "cond": "no"},
        {"src": "n_replace", "dst": "t_fixed", "cond": "done"},
        {"src": "n_wiring", "dst": "t_wiring", "cond": "done"},
        {"src": "n_battery", "dst": "t_battery", "cond": "done"},
    ],
}


class TestLoadEdgeList:
    def test_loads_valid_document(self):
        fc = load_edge_list(CAR_DOC)
        assert fc.id == "car"
        assert fc.root == "n_open"
        assert fc.node_ids[0] == "n_open"
        assert fc.next_hop("n_fuse", "no") == "n_wiring"

    def test_accepts_json_text_and_path(self, tmp_path):
        text = json.dumps(CAR_DOC)
        assert load_edge_list(text).id == "car"
        path = tmp_path / "car.json"
        path.write_text(text)
        assert load_edge_list(path).id == "car"

    def test_explicit_kind_is_kept(self):
        doc = {
            "id": "k",
            "root": "a",
            "nodes": [{"id": "a", "text": "x", "kind": "operation"}, {"id": "b", "text": "y"}],
            "edges": [{"src": "a", "dst": "b", "cond": "done"}],
        }
        fc = load_edge_list(doc)
        assert fc.node("a").declared_kind is NodeKind.OPERATION

    @pytest.mark.parametrize(
        "mutate, path_fragment",
        [
            (lambda d: d.pop("root"), "$.root"),
            (lambda d: d.update(root=7), "$.root"),
            (lambda d: d.update(nodes="nope"), "$.nodes"),
            (lambda d: d["nodes"].append({"id": "zz"}), "$.nodes[8].text"),
            (lambda d: d["edges"].append({"src": "a", "dst": "b"}), "$.edges[7].cond"),
            (lambda d: d["nodes"][0].update(kind="weird"), "$.nodes[0].kind"),
        ],
    )
    def test_schema_errors_carry_paths(self, mutate, path_fragment):
        doc = json.loads(json.dumps(CAR_DOC))
        mutate(doc)
        with pytest.raises(EdgeListSchemaError) as excinfo:
            load_edge_list(doc)
        assert excinfo.value.path == path_fragment

    def test_duplicate_node_id_is_a_schema_error(self):
        doc = json.loads(json.dumps(CAR_DOC))
        doc["nodes"].append({"id": "n_open", "text": "again"})
        with pytest.raises(EdgeListSchemaError, match="duplicate node id"):
            load_edge_list(doc)

    def test_validation_failures_surface_all_violations(self):
        doc = {
            "id": "bad",
            "root": "a",
            "nodes": [{"id": "a", "text": "x"}, {"id": "b", "text": "y"}],
            "edges": [
                {"src": "a", "dst": "ghost", "cond": "go"},
                {"src": "a", "dst": "b", "cond": "go"},
            ],
        }
        with pytest.raises(FlowchartValidationError) as excinfo:
            load_edge_list(doc)
        codes = {v.code for v in excinfo.value.violations}
        assert "dangling-edge" in codes
        assert "duplicate-condition" in codes


class TestSerializeEdgeList:
    def test_round_trip_is_identity_on_canonical_docs(self):
        assert serialize_edge_list(load_edge_list(CAR_DOC)) == CAR_DOC

    def test_round_trip_preserves_declared_kind_only(self):
        doc = {
            "id": "k",
            "root": "a",
            "nodes": [{"id": "a", "text": "x", "kind": "operation"}, {"id": "b", "text": "y"}],
            "edges": [{"src": "a", "dst": "b", "cond": "done"}],
        }
        assert serialize_edge_list(load_edge_list(doc)) == doc

    def test_double_round_trip_stable(self):
        once = serialize_edge_list(load_edge_list(CAR_DOC))
        twice = serialize_edge_list(load_edge_list(once))
        assert once == twice


class TestGroundTruthPaths:
    def test_car_paths_with_attributes(self, car_fc):
        paths = ground_truth_paths(car_fc)
        assert [p.nodes for p in paths] == [
            ["n_open", "n_fuse", "n_replace", "t_fixed"],
            ["n_open", "n_fuse", "n_wiring", "t_wiring"],
            ["n_open", "n_battery", "t_battery"],
        ]
        first = paths[0]
        assert first.node_texts[0] == "open circuit on run?"
        assert first.edge_conds == ["yes", "yes", "done"]

    def test_cyclic_unroll(self, cyclic_fc):
        paths = ground_truth_paths(cyclic_fc, revisit_bound=1)
        assert [p.nodes for p in paths] == [
            ["c_start", "c_check", "c_done"],
            ["c_start", "c_check", "c_retry", "c_check", "c_done"],
        ]
        assert paths[1].edge_conds == ["done", "no", "done", "yes"]
