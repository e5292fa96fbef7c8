"""Loading and serializing flowcharts in the edge-list JSON interchange format.

Document shape::

    {
      "id": "fc1",
      "root": "n1",
      "nodes": [{"id": "n1", "text": "...", "kind": "decision"?}, ...],
      "edges": [{"src": "n1", "dst": "n2", "cond": "yes"}, ...]
    }

``kind`` is optional; absent kinds are inferred from out-degree. Loading
then serializing preserves declaration order and omits kinds that were
not declared, so canonical documents round-trip byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from flowdialog.graph import Edge, Flowchart, Node, NodeKind, Violation


class EdgeListSchemaError(ValueError):
    """Malformed edge-list document. ``path`` points at the offending element."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.detail = message


class FlowchartValidationError(ValueError):
    """A structurally well-formed document that fails graph validation."""

    def __init__(self, fc_id: str, violations: list[Violation]):
        lines = "; ".join(f"[{v.code}] {v.message}" for v in violations)
        super().__init__(f"flowchart {fc_id!r} failed validation: {lines}")
        self.fc_id = fc_id
        self.violations = violations


def _require(value: Any, path: str, kind: type, name: str) -> Any:
    if not isinstance(value, kind):
        raise EdgeListSchemaError(path, f"expected {name}, got {type(value).__name__}")
    return value


def _require_key(obj: dict, path: str, key: str, kind: type, name: str) -> Any:
    if key not in obj:
        raise EdgeListSchemaError(f"{path}.{key}", "missing required key")
    return _require(obj[key], f"{path}.{key}", kind, name)


def load_edge_list(doc: dict | str | Path) -> Flowchart:
    """Build a validated :class:`Flowchart` from a document, JSON text, or file path.

    Raises :class:`EdgeListSchemaError` on shape problems and
    :class:`FlowchartValidationError` carrying the full violation list
    when the graph itself is invalid.
    """
    if isinstance(doc, Path):
        doc = json.loads(doc.read_text())
    elif isinstance(doc, str):
        doc = json.loads(doc)
    _require(doc, "$", dict, "object")
    fc_id = _require_key(doc, "$", "id", str, "string")
    root = _require_key(doc, "$", "root", str, "string")
    raw_nodes = _require_key(doc, "$", "nodes", list, "array")
    raw_edges = _require_key(doc, "$", "edges", list, "array")

    nodes: list[Node] = []
    for i, item in enumerate(raw_nodes):
        path = f"$.nodes[{i}]"
        _require(item, path, dict, "object")
        nid = _require_key(item, path, "id", str, "string")
        text = _require_key(item, path, "text", str, "string")
        declared = None
        if "kind" in item:
            kind_text = _require(item["kind"], f"{path}.kind", str, "string")
            try:
                declared = NodeKind(kind_text)
            except ValueError:
                raise EdgeListSchemaError(
                    f"{path}.kind",
                    f"unknown kind {kind_text!r}; expected one of "
                    f"{[k.value for k in NodeKind]}",
                ) from None
        nodes.append(Node(nid, text, declared))

    edges: list[Edge] = []
    for i, item in enumerate(raw_edges):
        path = f"$.edges[{i}]"
        _require(item, path, dict, "object")
        edges.append(
            Edge(
                _require_key(item, path, "src", str, "string"),
                _require_key(item, path, "dst", str, "string"),
                _require_key(item, path, "cond", str, "string"),
            )
        )

    seen_ids: set[str] = set()
    for i, node in enumerate(nodes):
        if node.id in seen_ids:
            raise EdgeListSchemaError(f"$.nodes[{i}].id", f"duplicate node id {node.id!r}")
        seen_ids.add(node.id)

    flowchart = Flowchart(fc_id, nodes, edges, root)
    violations = flowchart.validate()
    if violations:
        raise FlowchartValidationError(fc_id, violations)
    return flowchart


def serialize_edge_list(flowchart: Flowchart) -> dict:
    """Inverse of :func:`load_edge_list` for valid flowcharts.

    Nodes and edges appear in declaration order; ``kind`` is written only
    when it was declared on the node.
    """
    nodes = []
    for node in flowchart.nodes:
        entry: dict[str, Any] = {"id": node.id, "text": node.text}
        if node.declared_kind is not None:
            entry["kind"] = node.declared_kind.value
        nodes.append(entry)
    return {
        "id": flowchart.id,
        "root": flowchart.root,
        "nodes": nodes,
        "edges": [{"src": e.src, "dst": e.dst, "cond": e.cond} for e in flowchart.edges],
    }


@dataclass
class GroundTruthPath:
    """A root-to-terminal path with node and edge attributes resolved."""

    nodes: list[str]
    node_texts: list[str]
    edge_conds: list[str] = field(default_factory=list)


def ground_truth_paths(
    flowchart: Flowchart, revisit_bound: int = 0, cap: int = 10_000
) -> list[GroundTruthPath]:
    """Enumerate reference paths with their text attributes.

    For parallel edges between the same node pair the first matching edge
    in declaration order supplies the condition.
    """
    out: list[GroundTruthPath] = []
    for path in flowchart.enumerate_paths(revisit_bound=revisit_bound, cap=cap):
        conds = []
        for src, dst in zip(path, path[1:]):
            conds.append(next(e.cond for e in flowchart.out_edges(src) if e.dst == dst))
        out.append(
            GroundTruthPath(
                nodes=list(path),
                node_texts=[flowchart.node_attr(n) for n in path],
                edge_conds=conds,
            )
        )
    return out
