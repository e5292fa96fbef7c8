"""Parser for a PlantUML activity-diagram subset, lowering to flowchart graphs.

Supported: ``@startuml``/``@enduml`` markers, ``start``, ``stop``/``end``,
``:text;`` activities (which may span lines until the semicolon),
``if/elseif/else/endif`` with parenthesized branch labels, and
``repeat``/``repeat while`` loops. Apostrophe comments and blank lines are
skipped. Everything else is rejected: unknown text is a syntax error with a
line/column position, and recognized-but-unsupported constructs (fork,
partition, swimlanes, notes, while, switch, ...) raise a dedicated error
naming the construct.

Lowering rules: each activity becomes an operation node whose single exit
edge is labeled ``done``; each ``if``/``elseif``/``repeat while`` becomes a
decision node whose branch labels become edge conditions (``yes``/``no``
when unlabeled); each ``stop``/``end`` statement becomes its own terminal
node. The first node after ``start`` is the root.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from flowdialog.graph import Edge, Flowchart, Node
from flowdialog.ingest import FlowchartValidationError


class PlantUmlError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class PlantUmlSyntaxError(PlantUmlError):
    pass


class UnsupportedConstructError(PlantUmlError):
    def __init__(self, construct: str, line: int, col: int):
        super().__init__(f"unsupported construct: {construct}", line, col)
        self.construct = construct


# Constructs that are valid PlantUML but outside the supported subset.
# Keyed by leading keyword; swimlanes and arrows are detected separately.
_UNSUPPORTED_KEYWORDS = {
    "fork",
    "split",
    "partition",
    "note",
    "while",
    "endwhile",
    "switch",
    "case",
    "endswitch",
    "detach",
    "kill",
    "backward",
    "title",
    "skinparam",
    "legend",
    "caption",
    "group",
    "floating",
}

_IF_RE = re.compile(r"^if\s*\((?P<cond>[^()]*)\)\s*then(?:\s*\((?P<label>[^()]*)\))?$")
_ELSEIF_RE = re.compile(r"^elseif\s*\((?P<cond>[^()]*)\)\s*then(?:\s*\((?P<label>[^()]*)\))?$")
_ELSE_RE = re.compile(r"^else(?:\s*\((?P<label>[^()]*)\))?$")
_REPEAT_WHILE_RE = re.compile(
    r"^repeat\s+while\s*\((?P<cond>[^()]*)\)"
    r"(?:\s*is\s*\((?P<is>[^()]*)\))?"
    r"(?:\s*not\s*\((?P<neg>[^()]*)\))?$"
)


@dataclass
class _Token:
    kind: str
    line: int
    col: int
    text: str = ""
    label: str | None = None
    neg_label: str | None = None


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    lines = source.splitlines()
    i = 0
    while i < len(lines):
        raw = lines[i]
        lineno = i + 1
        stripped = raw.strip()
        col = raw.index(stripped[0]) + 1 if stripped else 1
        i += 1
        if not stripped or stripped.startswith("'"):
            continue
        if stripped.startswith("|"):
            raise UnsupportedConstructError("swimlane", lineno, col)
        if stripped.startswith("-"):
            raise UnsupportedConstructError("arrow", lineno, col)
        if stripped.startswith(":"):
            # Activity text runs to the terminating semicolon, possibly
            # across lines.
            body = stripped[1:]
            parts: list[str] = []
            while ";" not in body:
                parts.append(body)
                if i >= len(lines):
                    raise PlantUmlSyntaxError("activity is missing its closing ';'", lineno, col)
                body = lines[i].strip()
                i += 1
            head, _, tail = body.partition(";")
            if tail.strip():
                raise PlantUmlSyntaxError("unexpected text after ';'", lineno, col)
            parts.append(head)
            text = " ".join(p for p in (part.strip() for part in parts) if p)
            tokens.append(_Token("activity", lineno, col, text=text))
            continue
        lowered = stripped.lower()
        first_word = lowered.split()[0].rstrip("(")
        if lowered == "@startuml":
            tokens.append(_Token("startuml", lineno, col))
            continue
        if lowered == "@enduml":
            tokens.append(_Token("enduml", lineno, col))
            continue
        if lowered == "start":
            tokens.append(_Token("start", lineno, col))
            continue
        if lowered in ("stop", "end"):
            tokens.append(_Token("stop", lineno, col, text=lowered))
            continue
        match = _REPEAT_WHILE_RE.match(stripped)
        if match:
            tokens.append(
                _Token(
                    "repeat_while",
                    lineno,
                    col,
                    text=match.group("cond").strip(),
                    label=match.group("is"),
                    neg_label=match.group("neg"),
                )
            )
            continue
        if lowered == "repeat":
            tokens.append(_Token("repeat", lineno, col))
            continue
        match = _IF_RE.match(stripped)
        if match:
            tokens.append(
                _Token("if", lineno, col, text=match.group("cond").strip(), label=match.group("label"))
            )
            continue
        match = _ELSEIF_RE.match(stripped)
        if match:
            tokens.append(
                _Token("elseif", lineno, col, text=match.group("cond").strip(), label=match.group("label"))
            )
            continue
        match = _ELSE_RE.match(stripped)
        if match:
            tokens.append(_Token("else", lineno, col, label=match.group("label")))
            continue
        if lowered == "endif":
            tokens.append(_Token("endif", lineno, col))
            continue
        if first_word in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedConstructError(first_word, lineno, col)
        raise PlantUmlSyntaxError(f"unrecognized statement: {stripped!r}", lineno, col)
    return tokens


@dataclass
class _Activity:
    text: str
    line: int


@dataclass
class _Stop:
    keyword: str
    line: int


@dataclass
class _If:
    # (condition, branch label or None, body) per if/elseif arm
    arms: list[tuple[str, str | None, list]]
    else_label: str | None
    else_body: list | None
    line: int


@dataclass
class _Repeat:
    body: list
    cond: str
    loop_label: str | None
    exit_label: str | None
    line: int


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def parse_document(self) -> list:
        token = self.peek()
        if token is None or token.kind != "startuml":
            line, col = (token.line, token.col) if token else (1, 1)
            raise PlantUmlSyntaxError("expected @startuml", line, col)
        self.take()
        token = self.peek()
        if token is None or token.kind != "start":
            line, col = (token.line, token.col) if token else (1, 1)
            raise PlantUmlSyntaxError("expected start", line, col)
        self.take()
        body = self.parse_block(("enduml",))
        token = self.peek()
        if token is None:
            raise PlantUmlSyntaxError("expected @enduml", self.tokens[-1].line, 1)
        self.take()
        trailing = self.peek()
        if trailing is not None:
            raise PlantUmlSyntaxError("content after @enduml", trailing.line, trailing.col)
        return body

    def parse_block(self, until: tuple[str, ...]) -> list:
        stmts: list = []
        while True:
            token = self.peek()
            if token is None:
                raise PlantUmlSyntaxError(
                    f"unexpected end of input; expected one of {', '.join(until)}",
                    self.tokens[-1].line if self.tokens else 1,
                    1,
                )
            if token.kind in until:
                return stmts
            if token.kind == "activity":
                self.take()
                if not token.text:
                    raise PlantUmlSyntaxError("activity text is empty", token.line, token.col)
                stmts.append(_Activity(token.text, token.line))
            elif token.kind == "stop":
                self.take()
                stmts.append(_Stop(token.text, token.line))
            elif token.kind == "if":
                stmts.append(self.parse_if())
            elif token.kind == "repeat":
                stmts.append(self.parse_repeat())
            else:
                raise PlantUmlSyntaxError(
                    f"unexpected {token.kind!r} here", token.line, token.col
                )

    def parse_if(self) -> _If:
        opener = self.take()
        arms: list[tuple[str, str | None, list]] = []
        body = self.parse_block(("elseif", "else", "endif"))
        arms.append((opener.text, opener.label, body))
        else_label: str | None = None
        else_body: list | None = None
        while True:
            token = self.take()
            if token.kind == "elseif":
                body = self.parse_block(("elseif", "else", "endif"))
                arms.append((token.text, token.label, body))
            elif token.kind == "else":
                else_label = token.label
                else_body = self.parse_block(("endif",))
                self.take()
                break
            else:  # endif
                break
        return _If(arms, else_label, else_body, opener.line)

    def parse_repeat(self) -> _Repeat:
        opener = self.take()
        body = self.parse_block(("repeat_while",))
        closer = self.take()
        return _Repeat(body, closer.text, closer.label, closer.neg_label, opener.line)


# One pending edge: (source node id, condition label) awaiting its target.
_Pending = list[tuple[str, str]]


@dataclass
class _Builder:
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)

    def new_node(self, text: str) -> str:
        node_id = f"n{len(self.nodes) + 1}"
        self.nodes.append(Node(node_id, text))
        return node_id

    def connect(self, pending: _Pending, target: str) -> None:
        for src, label in pending:
            self.edges.append(Edge(src, target, label))


def _lower_block(builder: _Builder, stmts: list, pending: _Pending) -> tuple[_Pending, str | None]:
    """Lower a statement list; returns outgoing pending edges and the block's first node."""
    first_node: str | None = None

    def note_first(node_id: str) -> None:
        nonlocal first_node
        if first_node is None:
            first_node = node_id

    for stmt in stmts:
        if isinstance(stmt, _Activity):
            node_id = builder.new_node(stmt.text)
            note_first(node_id)
            builder.connect(pending, node_id)
            pending = [(node_id, "done")]
        elif isinstance(stmt, _Stop):
            node_id = builder.new_node(stmt.keyword)
            note_first(node_id)
            builder.connect(pending, node_id)
            pending = []
        elif isinstance(stmt, _If):
            joined: _Pending = []
            chain_src: str | None = None
            for cond, label, body in stmt.arms:
                if not cond.strip():
                    raise PlantUmlSyntaxError("branch condition is empty", stmt.line, 1)
                dec_id = builder.new_node(cond)
                note_first(dec_id)
                if chain_src is None:
                    builder.connect(pending, dec_id)
                else:
                    # Fall-through edge from the previous decision in an
                    # elseif chain; PlantUML gives it no label.
                    builder.connect([(chain_src, "no")], dec_id)
                arm_pending: _Pending = [(dec_id, (label or "yes").strip() or "yes")]
                arm_tail, _ = _lower_block(builder, body, arm_pending)
                joined.extend(arm_tail)
                chain_src = dec_id
            assert chain_src is not None
            neg_label = (stmt.else_label or "no").strip() or "no"
            if stmt.else_body is not None:
                else_tail, _ = _lower_block(builder, stmt.else_body, [(chain_src, neg_label)])
                joined.extend(else_tail)
            else:
                joined.append((chain_src, neg_label))
            pending = joined
        elif isinstance(stmt, _Repeat):
            before = len(builder.nodes)
            body_tail, loop_head = _lower_block(builder, stmt.body, pending)
            if loop_head is None or len(builder.nodes) == before:
                raise PlantUmlSyntaxError("repeat body is empty", stmt.line, 1)
            note_first(loop_head)
            if not stmt.cond.strip():
                raise PlantUmlSyntaxError("repeat condition is empty", stmt.line, 1)
            dec_id = builder.new_node(stmt.cond)
            builder.connect(body_tail, dec_id)
            loop_label = (stmt.loop_label or "yes").strip() or "yes"
            exit_label = (stmt.exit_label or "no").strip() or "no"
            builder.edges.append(Edge(dec_id, loop_head, loop_label))
            pending = [(dec_id, exit_label)]
        else:  # pragma: no cover - parser only yields the four kinds
            raise AssertionError(f"unknown statement {stmt!r}")
    return pending, first_node


def parse_plantuml(source: str, fc_id: str = "plantuml") -> Flowchart:
    """Parse PlantUML activity source into a validated :class:`Flowchart`.

    Node ids are generated in creation order (``n1``, ``n2``, ...), which
    makes parses of the same source deterministic. Raises
    :class:`PlantUmlSyntaxError` or :class:`UnsupportedConstructError`
    with positions for bad input, and
    :class:`~flowdialog.ingest.FlowchartValidationError` when the lowered
    graph is structurally invalid (for example duplicate branch labels).
    """
    tokens = _tokenize(source)
    stmts = _Parser(tokens).parse_document()
    builder = _Builder()
    # Trailing pending edges at document end flow nowhere; the nodes they
    # leave behind simply have out-degree 0 and read as terminals.
    _lower_block(builder, stmts, [])
    if not builder.nodes:
        raise PlantUmlSyntaxError("diagram has no nodes", 1, 1)
    flowchart = Flowchart(fc_id, builder.nodes, builder.edges, root=builder.nodes[0].id)
    violations = flowchart.validate()
    if violations:
        raise FlowchartValidationError(fc_id, violations)
    return flowchart
