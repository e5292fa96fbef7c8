"""Text-attributed directed flowchart graphs and the query operations agents run on them.

A flowchart is a rooted directed graph whose nodes carry natural-language
attributes (a question to ask or an action to perform) and whose edges carry
condition labels (the answer that selects that branch). Node kinds follow the
topology: no outgoing edges makes a terminal, exactly one makes an operation
step, two or more make a decision.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

_WS_RE = re.compile(r"\s+")


def normalize_condition(text: str) -> str:
    """Canonical form used for all condition comparisons.

    Lowercases, trims, and collapses internal whitespace runs to single
    spaces. Matching and duplicate detection always go through this;
    stored condition text keeps its original surface form.
    """
    return _WS_RE.sub(" ", text.strip()).lower()


class FlowgraphError(Exception):
    """Base class for flowchart graph errors."""


class UnknownNodeError(FlowgraphError):
    def __init__(self, node_id: str):
        super().__init__(f"unknown node id: {node_id!r}")
        self.node_id = node_id


class NoMatchingEdgeError(FlowgraphError):
    """Raised when a condition selects no outgoing edge.

    Carries the conditions that were available so callers can surface
    them (error messages, reprompts) without a second lookup.
    """

    def __init__(self, node_id: str, condition: str, available: Sequence[str]):
        super().__init__(
            f"node {node_id!r} has no outgoing edge matching {condition!r}; "
            f"available: {list(available)!r}"
        )
        self.node_id = node_id
        self.condition = condition
        self.available = list(available)


class PathExplosionError(FlowgraphError):
    def __init__(self, cap: int):
        super().__init__(f"path enumeration exceeded cap of {cap} paths")
        self.cap = cap


class NodeKind(str, Enum):
    DECISION = "decision"
    OPERATION = "operation"
    TERMINAL = "terminal"


@dataclass(frozen=True)
class Node:
    """A flowchart node: stable id plus its text attribute.

    ``declared_kind`` is only set when the source document spelled a kind
    out explicitly; it is checked against the topology during validation.
    """

    id: str
    text: str
    declared_kind: NodeKind | None = None


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    cond: str


@dataclass(frozen=True)
class Violation:
    """One validation finding. Violations are data, not exceptions."""

    code: str
    message: str


class Flowchart:
    """Immutable rooted flowchart. Declaration order of nodes and edges is preserved.

    Construction is deliberately permissive so that :meth:`validate` can
    report problems (dangling edges, unreachable nodes, duplicate
    conditions) instead of hiding them behind the first raise. Only
    duplicate node ids are rejected outright since the second definition
    would silently shadow the first.
    """

    def __init__(self, fc_id: str, nodes: Iterable[Node], edges: Iterable[Edge], root: str):
        self.id = fc_id
        self.root = root
        self._nodes: dict[str, Node] = {}
        for node in nodes:
            if node.id in self._nodes:
                raise ValueError(f"duplicate node id: {node.id!r}")
            self._nodes[node.id] = node
        self._edges: tuple[Edge, ...] = tuple(edges)
        self._out: dict[str, list[Edge]] = {nid: [] for nid in self._nodes}
        for edge in self._edges:
            # Dangling sources get an adjacency slot too so validation can walk them.
            self._out.setdefault(edge.src, []).append(edge)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(self._nodes)

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes.values())

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def out_edges(self, node_id: str) -> tuple[Edge, ...]:
        self.node(node_id)
        return tuple(self._out.get(node_id, ()))

    # -- query operations ------------------------------------------------

    def node_attr(self, node_id: str) -> str:
        """Text attribute of a node."""
        return self.node(node_id).text

    def out_edge_attrs(self, node_id: str) -> list[str]:
        """Condition labels of the outgoing edges, in declaration order."""
        return [e.cond for e in self.out_edges(node_id)]

    def next_hop(self, node_id: str, condition: str) -> str:
        """Destination reached by following the edge whose condition matches.

        Matching is exact under :func:`normalize_condition`. Raises
        :class:`NoMatchingEdgeError` (listing what was available) when
        nothing matches.
        """
        want = normalize_condition(condition)
        for edge in self.out_edges(node_id):
            if normalize_condition(edge.cond) == want:
                return edge.dst
        raise NoMatchingEdgeError(node_id, condition, self.out_edge_attrs(node_id))

    def terminal_check(self, node_id: str) -> bool:
        """True when the node has no outgoing edges."""
        return not self.out_edges(node_id)

    def kind(self, node_id: str) -> NodeKind:
        """Effective node kind: the declared one, else inferred from out-degree."""
        node = self.node(node_id)
        if node.declared_kind is not None:
            return node.declared_kind
        return self._inferred_kind(node_id)

    def _inferred_kind(self, node_id: str) -> NodeKind:
        degree = len(self._out.get(node_id, ()))
        if degree == 0:
            return NodeKind.TERMINAL
        if degree == 1:
            return NodeKind.OPERATION
        return NodeKind.DECISION

    # -- validation ------------------------------------------------------

    def validate(self) -> list[Violation]:
        """Full list of structural violations; empty means the flowchart is valid.

        Checks: root membership, node attribute and edge condition
        non-emptiness, per-source condition uniqueness (normalized),
        dangling edge endpoints, reachability from the root, existence of
        a reachable terminal, and declared-kind consistency with
        out-degree.
        """
        found: list[Violation] = []
        if self.root not in self._nodes:
            found.append(Violation("missing-root", f"root {self.root!r} is not a node"))
        for node in self._nodes.values():
            if not node.text.strip():
                found.append(Violation("empty-attribute", f"node {node.id!r} has an empty attribute"))
        for edge in self._edges:
            if edge.src not in self._nodes:
                found.append(Violation("dangling-edge", f"edge source {edge.src!r} is not a node"))
            if edge.dst not in self._nodes:
                found.append(Violation("dangling-edge", f"edge target {edge.dst!r} is not a node"))
            if not normalize_condition(edge.cond):
                found.append(
                    Violation(
                        "empty-condition",
                        f"edge {edge.src!r} -> {edge.dst!r} has an empty condition",
                    )
                )
        for node_id in self._nodes:
            seen: dict[str, str] = {}
            for edge in self._out.get(node_id, ()):
                norm = normalize_condition(edge.cond)
                if norm and norm in seen:
                    found.append(
                        Violation(
                            "duplicate-condition",
                            f"node {node_id!r} has duplicate outgoing condition {norm!r}",
                        )
                    )
                seen[norm] = edge.cond
        reachable = self._reachable_from_root()
        for node_id in self._nodes:
            if node_id not in reachable:
                found.append(Violation("unreachable-node", f"node {node_id!r} is unreachable from the root"))
        if self.root in self._nodes and not any(
            self.terminal_check(nid) for nid in reachable if nid in self._nodes
        ):
            found.append(Violation("no-terminal", "no terminal node is reachable from the root"))
        for node in self._nodes.values():
            if node.declared_kind is not None:
                inferred = self._inferred_kind(node.id)
                if node.declared_kind is not inferred:
                    found.append(
                        Violation(
                            "kind-mismatch",
                            f"node {node.id!r} declared {node.declared_kind.value} "
                            f"but out-degree implies {inferred.value}",
                        )
                    )
        return found

    def _reachable_from_root(self) -> set[str]:
        if self.root not in self._nodes:
            return set()
        seen = {self.root}
        stack = [self.root]
        while stack:
            current = stack.pop()
            for edge in self._out.get(current, ()):
                if edge.dst in self._nodes and edge.dst not in seen:
                    seen.add(edge.dst)
                    stack.append(edge.dst)
        return seen

    # -- path enumeration ------------------------------------------------

    def enumerate_paths(self, revisit_bound: int = 0, cap: int = 10_000) -> list[tuple[str, ...]]:
        """All root-to-terminal paths where no node repeats more than ``revisit_bound`` times.

        A bound of 0 yields simple paths; each extra unit allows one more
        revisit per node, which is how cyclic charts (repeat loops) get a
        finite unrolling. Paths come out in depth-first order following
        edge declaration order, so the result is deterministic. Raises
        :class:`PathExplosionError` once more than ``cap`` paths exist.
        """
        if self.root not in self._nodes:
            raise UnknownNodeError(self.root)
        paths: list[tuple[str, ...]] = []
        visits: dict[str, int] = {self.root: 1}
        trail: list[str] = [self.root]

        def walk(node_id: str) -> None:
            if self.terminal_check(node_id):
                if len(paths) >= cap:
                    raise PathExplosionError(cap)
                paths.append(tuple(trail))
                return
            for edge in self._out.get(node_id, ()):
                if edge.dst not in self._nodes:
                    continue
                if visits.get(edge.dst, 0) > revisit_bound:
                    continue
                visits[edge.dst] = visits.get(edge.dst, 0) + 1
                trail.append(edge.dst)
                walk(edge.dst)
                trail.pop()
                visits[edge.dst] -= 1

        walk(self.root)
        return paths

    def depth(self) -> int:
        """Longest simple root-to-terminal path, in hops.

        Falls back to the node count if simple-path enumeration overflows
        the default cap, which keeps the value usable as a traversal
        budget on adversarially dense graphs.
        """
        try:
            paths = self.enumerate_paths(revisit_bound=0)
        except PathExplosionError:
            return len(self._nodes)
        if not paths:
            return len(self._nodes)
        return max(len(p) - 1 for p in paths)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (
            f"Flowchart(id={self.id!r}, nodes={len(self._nodes)}, "
            f"edges={len(self._edges)}, root={self.root!r})"
        )
