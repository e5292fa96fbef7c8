from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from flowdialog.graph import (
    Edge,
    Flowchart,
    Node,
    NodeKind,
    NoMatchingEdgeError,
    PathExplosionError,
    UnknownNodeError,
    normalize_condition,
)
from oracles import brute_force_paths, random_flowchart


class TestNormalization:
    def test_lowercases_trims_collapses(self):
        assert normalize_condition("  Fuse  wire\tBLOWN  ") == "fuse wire blown"

    def test_already_normal_is_unchanged(self):
        assert normalize_condition("yes") == "yes"

    @given(st.text())
    def test_idempotent(self, text):
        once = normalize_condition(text)
        assert normalize_condition(once) == once


class TestQueries:
    def test_node_attr(self, car_fc):
        assert car_fc.node_attr("n_fuse") == "fuse wire blown?"

    def test_node_attr_unknown_node(self, car_fc):
        with pytest.raises(UnknownNodeError):
            car_fc.node_attr("nope")

    def test_out_edge_attrs_declaration_order(self, car_fc):
        assert car_fc.out_edge_attrs("n_open") == ["yes", "no"]

    def test_out_edge_attrs_single_edge(self, car_fc):
        assert car_fc.out_edge_attrs("n_replace") == ["done"]

    def test_out_edge_attrs_terminal_is_empty(self, car_fc):
        assert car_fc.out_edge_attrs("t_fixed") == []

    def test_next_hop_exact(self, car_fc):
        assert car_fc.next_hop("n_open", "yes") == "n_fuse"

    def test_next_hop_normalizes_before_matching(self, car_fc):
        assert car_fc.next_hop("n_open", "  YES ") == "n_fuse"

    def test_next_hop_no_match_lists_available(self, car_fc):
        with pytest.raises(NoMatchingEdgeError) as excinfo:
            car_fc.next_hop("n_open", "maybe")
        assert excinfo.value.available == ["yes", "no"]

    def test_terminal_check(self, car_fc):
        assert car_fc.terminal_check("t_battery")
        assert not car_fc.terminal_check("n_open")

    def test_kind_inference(self, car_fc):
        assert car_fc.kind("n_open") is NodeKind.DECISION
        assert car_fc.kind("n_replace") is NodeKind.OPERATION
        assert car_fc.kind("t_fixed") is NodeKind.TERMINAL

    def test_declared_kind_wins(self):
        fc = Flowchart(
            "k",
            [Node("a", "x", NodeKind.OPERATION), Node("b", "y")],
            [Edge("a", "b", "done")],
            "a",
        )
        assert fc.kind("a") is NodeKind.OPERATION

    def test_duplicate_node_ids_rejected_at_construction(self):
        with pytest.raises(ValueError, match="duplicate node id"):
            Flowchart("d", [Node("a", "x"), Node("a", "y")], [], "a")


class TestValidate:
    def test_valid_chart_has_no_violations(self, car_fc, cyclic_fc, diamond_fc):
        assert car_fc.validate() == []
        assert cyclic_fc.validate() == []
        assert diamond_fc.validate() == []

    def _codes(self, fc):
        return sorted(v.code for v in fc.validate())

    def test_duplicate_condition(self):
        fc = Flowchart(
            "dup",
            [Node("a", "q?"), Node("b", "x"), Node("c", "y")],
            [Edge("a", "b", "yes"), Edge("a", "c", " YES ")],
            "a",
        )
        assert "duplicate-condition" in self._codes(fc)

    def test_dangling_edge(self):
        fc = Flowchart("dang", [Node("a", "x")], [Edge("a", "ghost", "done")], "a")
        assert "dangling-edge" in self._codes(fc)

    def test_unreachable_node(self):
        fc = Flowchart(
            "unreach",
            [Node("a", "x"), Node("b", "y"), Node("c", "z")],
            [Edge("a", "b", "done")],
            "a",
        )
        assert "unreachable-node" in self._codes(fc)

    def test_missing_root(self):
        fc = Flowchart("noroot", [Node("a", "x")], [], "zzz")
        assert "missing-root" in self._codes(fc)

    def test_no_reachable_terminal(self):
        fc = Flowchart(
            "loop",
            [Node("a", "x"), Node("b", "y")],
            [Edge("a", "b", "go"), Edge("b", "a", "back")],
            "a",
        )
        assert "no-terminal" in self._codes(fc)

    def test_empty_condition(self):
        fc = Flowchart(
            "blank", [Node("a", "x"), Node("b", "y")], [Edge("a", "b", "   ")], "a"
        )
        assert "empty-condition" in self._codes(fc)

    def test_empty_attribute(self):
        fc = Flowchart("attr", [Node("a", " "), Node("b", "y")], [Edge("a", "b", "go")], "a")
        assert "empty-attribute" in self._codes(fc)

    def test_kind_mismatch(self):
        fc = Flowchart(
            "kind",
            [Node("a", "x", NodeKind.DECISION), Node("b", "y")],
            [Edge("a", "b", "done")],
            "a",
        )
        assert "kind-mismatch" in self._codes(fc)

    def test_violations_accumulate(self):
        fc = Flowchart(
            "multi",
            [Node("a", ""), Node("b", "y")],
            [Edge("a", "ghost", "go")],
            "a",
        )
        codes = self._codes(fc)
        assert "empty-attribute" in codes
        assert "dangling-edge" in codes
        assert "unreachable-node" in codes


class TestEnumeratePaths:
    def test_car_paths_in_declaration_order(self, car_fc):
        assert car_fc.enumerate_paths() == [
            ("n_open", "n_fuse", "n_replace", "t_fixed"),
            ("n_open", "n_fuse", "n_wiring", "t_wiring"),
            ("n_open", "n_battery", "t_battery"),
        ]

    def test_cyclic_bound_zero_skips_the_loop(self, cyclic_fc):
        assert cyclic_fc.enumerate_paths(revisit_bound=0) == [
            ("c_start", "c_check", "c_done")
        ]

    def test_cyclic_bound_one_unrolls_once(self, cyclic_fc):
        assert cyclic_fc.enumerate_paths(revisit_bound=1) == [
            ("c_start", "c_check", "c_done"),
            ("c_start", "c_check", "c_retry", "c_check", "c_done"),
        ]

    def test_cap_raises(self, car_fc):
        with pytest.raises(PathExplosionError):
            car_fc.enumerate_paths(cap=2)

    def test_matches_oracle_on_fixtures(self, car_fc, cyclic_fc, diamond_fc):
        for fc in (car_fc, diamond_fc):
            assert fc.enumerate_paths() == brute_force_paths(fc)
        for bound in (0, 1, 2):
            assert cyclic_fc.enumerate_paths(revisit_bound=bound) == brute_force_paths(
                cyclic_fc, revisit_bound=bound
            )

    def test_matches_oracle_on_random_charts(self):
        rng = random.Random(20240817)
        for _ in range(25):
            fc = random_flowchart(rng)
            assert fc.validate() == []
            for bound in (0, 1):
                assert fc.enumerate_paths(revisit_bound=bound) == brute_force_paths(
                    fc, revisit_bound=bound
                )

    def test_depth_is_longest_simple_path(self, car_fc, cyclic_fc):
        assert car_fc.depth() == 3
        assert cyclic_fc.depth() == 2


@given(st.data())
def test_next_hop_agrees_with_linear_scan(data):
    seed = data.draw(st.integers(min_value=0, max_value=10**6))
    fc = random_flowchart(random.Random(seed), max_nodes=12)
    for node_id in fc.node_ids:
        assert fc.terminal_check(node_id) == (len(fc.out_edges(node_id)) == 0)
        for cond in fc.out_edge_attrs(node_id):
            expected = next(
                e.dst
                for e in fc.edges
                if e.src == node_id
                and normalize_condition(e.cond) == normalize_condition(cond)
            )
            assert fc.next_hop(node_id, cond) == expected
