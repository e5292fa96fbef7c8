"""Flowchart-grounded dialogue agent.

The agent holds exactly one grounded node per turn. A session opens with a
self-loop pass from the root that consumes whatever the first utterance
already answers: at each decision node the model is asked which outgoing
condition the utterance satisfies, at each operation node whether the step
was already performed, and the walk advances on a match and stops on the
first miss or at the hop bound. Later turns move at most one edge each.

Model calls all run through the gateway's structured-choice interface over
a closed label set: the current node's edge conditions plus the two control
labels below. Domain questions are answered from the FAQ store without
moving the grounded node.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from flowdialog.faq import EmptyStoreError, FaqStore
from flowdialog.gateway import (
    ChatMessage,
    MalformedResponseError,
    ModelBinding,
    complete,
    structured_choice,
)
from flowdialog.graph import Flowchart, NodeKind, normalize_condition
from flowdialog.ingest import serialize_edge_list

DOMAIN_QUESTION = "DOMAIN_QUESTION"
UNCLEAR = "UNCLEAR"

# Claimed-node marker for baseline replies that did not follow the format.
INVALID_NODE = "__invalid__"

_FALLBACK_FAQ_ANSWER = "I do not have reference material for that question."
_BUDGET_UTTERANCE = "I could not finish this flow within the allowed number of turns."

_SYSTEM_PROMPT = (
    "You walk a troubleshooting flowchart with a user, one node at a time. "
    "Answer classification requests with exactly one of the offered labels."
)


class AgentError(Exception):
    pass


class SessionPhaseError(AgentError):
    """Raised when a turn arrives after the session already ended."""


class AgentPhase(str, Enum):
    ACTIVE = "active"
    TERMINAL = "terminal"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass
class AgentConfig:
    """Per-session knobs.

    ``turn_budget`` is the hard ceiling on user turns; ``max_selfloop_hops``
    bounds the opening walk and defaults to the flowchart depth;
    ``faq_threshold`` is the minimum retrieval score for answering a
    domain question from the store.
    """

    turn_budget: int
    max_selfloop_hops: int | None = None
    faq_threshold: float = 0.2

    def __post_init__(self) -> None:
        if self.turn_budget < 1:
            raise ValueError("turn_budget must be at least 1")
        if self.max_selfloop_hops is not None and self.max_selfloop_hops < 0:
            raise ValueError("max_selfloop_hops cannot be negative")


@dataclass
class TurnOutcome:
    kind: str  # transitioned | stayed | faq_answered | reached_terminal | budget_exceeded
    utterance: str
    node: str
    hops: int = 0  # self-loop hops taken; nonzero only for session start


@dataclass
class AgentState:
    """Mutable session state.

    ``predicted`` is the evaluated node sequence: it opens with the node
    grounded on turn one and gains one entry per later transition, so
    consecutive entries are always connected by an edge. ``visited`` also
    keeps the nodes the opening self-loop walked through before grounding,
    as an audit trail. ``transition_lengths`` holds the completed
    transitions' turn costs; ``pending_turns`` the turns spent on the
    transition still in progress.
    """

    flowchart: Flowchart
    config: AgentConfig
    current: str
    phase: AgentPhase
    turn: int
    predicted: list[str]
    visited: list[str]
    transition_lengths: list[int] = field(default_factory=list)
    pending_turns: int = 0
    faq_turns: int = 0
    turn_events: list[tuple[str, str]] = field(default_factory=list)
    history: list[tuple[str, str]] = field(default_factory=list)

    @property
    def stay_counters(self) -> list[int]:
        counters = list(self.transition_lengths)
        if self.pending_turns:
            counters.append(self.pending_turns)
        return counters


def _tagged(tag: str, *lines: str) -> list[ChatMessage]:
    return [
        ChatMessage("system", _SYSTEM_PROMPT),
        ChatMessage("user", "\n".join([tag, *lines])),
    ]


def rephrase(
    flowchart: Flowchart, node_id: str, binding: ModelBinding, lead_in: str | None = None
) -> str:
    """Turn a node attribute into an utterance addressed to the user.

    Scripted bindings return the attribute verbatim, which keeps offline
    runs deterministic. Remote bindings get a generation prompt; an empty
    generation is a malformed response.
    """
    attr = flowchart.node_attr(node_id)
    if binding.is_scripted:
        return attr
    messages = _tagged(
        f"[ask node={node_id}]",
        "Rewrite the flowchart step below as a single natural question or "
        "instruction to the user. Keep its meaning exactly.",
        f"Step: {attr}",
        *(["Context: " + lead_in] if lead_in else []),
    )
    text = complete(binding, messages, temperature=0.7).strip()
    if not text:
        raise MalformedResponseError("rephrase produced an empty utterance")
    return text


def _choice_at_decision(
    flowchart: Flowchart, node_id: str, utterance: str, binding: ModelBinding
) -> str | None:
    conds = flowchart.out_edge_attrs(node_id)
    messages = _tagged(
        f"[ground node={node_id}]",
        "Question already covered check. The flowchart step is:",
        flowchart.node_attr(node_id),
        "Does the user's message below answer it? If yes, reply with the "
        "matching option exactly as written; if not, reply NONE.",
        "Options: " + "; ".join(conds),
        f"User: {utterance}",
    )
    return structured_choice(binding, messages, conds)


def _operation_done(
    flowchart: Flowchart, node_id: str, utterance: str, binding: ModelBinding
) -> bool:
    messages = _tagged(
        f"[op-check node={node_id}]",
        "The flowchart asks the user to do this step:",
        flowchart.node_attr(node_id),
        "Does the user's message below indicate the step is already done? "
        "Reply yes or no.",
        f"User: {utterance}",
    )
    return structured_choice(binding, messages, ["yes", "no"]) == "yes"


def start(
    flowchart: Flowchart,
    utterance: str,
    binding: ModelBinding,
    config: AgentConfig,
) -> tuple[AgentState, TurnOutcome]:
    """Open a session: ground the first utterance via the root self-loop.

    The walk advances only while the model confirms that the utterance
    already settles the current node, and never takes more than the hop
    bound. The grounded node seeds ``predicted``; the nodes passed on the
    way appear only in ``visited``.
    """
    node = flowchart.root
    visited = [node]
    max_hops = (
        config.max_selfloop_hops if config.max_selfloop_hops is not None else flowchart.depth()
    )
    hops = 0
    while hops < max_hops and not flowchart.terminal_check(node):
        if flowchart.kind(node) is NodeKind.DECISION:
            label = _choice_at_decision(flowchart, node, utterance, binding)
        else:
            conds = flowchart.out_edge_attrs(node)
            label = conds[0] if _operation_done(flowchart, node, utterance, binding) else None
        if label is None:
            break
        node = flowchart.next_hop(node, label)
        visited.append(node)
        hops += 1

    state = AgentState(
        flowchart=flowchart,
        config=config,
        current=node,
        phase=AgentPhase.ACTIVE,
        turn=1,
        predicted=[node],
        visited=visited,
    )
    if flowchart.terminal_check(node):
        state.phase = AgentPhase.TERMINAL
        outcome = TurnOutcome("reached_terminal", rephrase(flowchart, node, binding), node, hops)
    else:
        outcome = TurnOutcome("stayed", rephrase(flowchart, node, binding), node, hops)
    state.turn_events.append((outcome.kind, node))
    state.history.append((utterance, outcome.utterance))
    return state, outcome


def _answer_domain_question(
    state: AgentState, utterance: str, binding: ModelBinding, faq_store: FaqStore | None
) -> str:
    answer = _FALLBACK_FAQ_ANSWER
    if faq_store is not None:
        try:
            top = faq_store.retrieve(utterance, k=1)[0]
        except EmptyStoreError:
            top = None
        if top is not None and top.score >= state.config.faq_threshold:
            answer = top.entry.answer
    reprompt = rephrase(state.flowchart, state.current, binding)
    return f"{answer}\n{reprompt}"


def step(
    state: AgentState,
    utterance: str,
    binding: ModelBinding,
    faq_store: FaqStore | None = None,
) -> TurnOutcome:
    """Process one user turn against an active session.

    An utterance that is literally one of the outgoing conditions resolves
    without a model call; everything else goes through intent
    classification over the conditions plus the control labels. Domain
    questions are answered in place (grounded node unchanged) and the
    reply re-asks the current step so the flow can resume.
    """
    if state.phase is not AgentPhase.ACTIVE:
        raise SessionPhaseError(f"session is {state.phase.value}, not active")
    state.turn += 1
    if state.turn > state.config.turn_budget:
        state.phase = AgentPhase.BUDGET_EXCEEDED
        outcome = TurnOutcome("budget_exceeded", _BUDGET_UTTERANCE, state.current)
        state.turn_events.append((outcome.kind, outcome.node))
        state.history.append((utterance, outcome.utterance))
        return outcome

    flowchart = state.flowchart
    conds = flowchart.out_edge_attrs(state.current)
    normalized = normalize_condition(utterance)
    literal = [c for c in conds if normalize_condition(c) == normalized]
    if len(literal) == 1:
        label: str | None = literal[0]
    else:
        messages = _tagged(
            f"[intent node={state.current}]",
            "Current flowchart step:",
            flowchart.node_attr(state.current),
            "Classify the user's message: reply with the matching option "
            f"exactly as written, {DOMAIN_QUESTION} for an off-flow domain "
            f"question, or {UNCLEAR} if none fit.",
            "Options: " + "; ".join([*conds, DOMAIN_QUESTION, UNCLEAR]),
            f"User: {utterance}",
        )
        label = structured_choice(binding, messages, [*conds, DOMAIN_QUESTION, UNCLEAR])

    if label == DOMAIN_QUESTION:
        state.pending_turns += 1
        state.faq_turns += 1
        reply = _answer_domain_question(state, utterance, binding, faq_store)
        outcome = TurnOutcome("faq_answered", reply, state.current)
    elif label is None or label == UNCLEAR:
        state.pending_turns += 1
        outcome = TurnOutcome("stayed", rephrase(flowchart, state.current, binding), state.current)
    else:
        destination = flowchart.next_hop(state.current, label)
        state.current = destination
        state.predicted.append(destination)
        state.visited.append(destination)
        state.transition_lengths.append(state.pending_turns + 1)
        state.pending_turns = 0
        if flowchart.terminal_check(destination):
            state.phase = AgentPhase.TERMINAL
            outcome = TurnOutcome(
                "reached_terminal", rephrase(flowchart, destination, binding), destination
            )
        else:
            outcome = TurnOutcome(
                "transitioned", rephrase(flowchart, destination, binding), destination
            )
    state.turn_events.append((outcome.kind, outcome.node))
    state.history.append((utterance, outcome.utterance))
    return outcome


@dataclass
class BaselineTurn:
    claimed_node: str
    reply: str


def serialized_baseline_turn(
    flowchart: Flowchart,
    history: list[tuple[str, str]],
    utterance: str,
    binding: ModelBinding,
) -> BaselineTurn:
    """One turn of the whole-graph-in-prompt baseline.

    The full edge list is serialized into the prompt and the model must
    answer with ``NODE: <id>`` on the first line. The claimed node is
    recorded as stated, adjacent or not; replies that break the format get
    the :data:`INVALID_NODE` marker. This baseline exists to be measured
    against, not to be good.
    """
    lines = [
        f"[baseline fc={flowchart.id}]",
        "You are given a complete flowchart as JSON. Track the dialogue and "
        "answer with the node you are at, then your reply to the user.",
        "Answer format: first line 'NODE: <id>', remaining lines the reply.",
        "Flowchart: " + json.dumps(serialize_edge_list(flowchart), sort_keys=True),
    ]
    for user_turn, agent_turn in history:
        lines.append(f"User: {user_turn}")
        lines.append(f"Agent: {agent_turn}")
    lines.append(f"User: {utterance}")
    raw = complete(binding, [ChatMessage("user", "\n".join(lines))], temperature=0.0)
    head, _, tail = raw.partition("\n")
    head = head.strip()
    if head.upper().startswith("NODE:"):
        claimed = head[5:].strip()
        if claimed:
            return BaselineTurn(claimed, tail.strip())
    return BaselineTurn(INVALID_NODE, raw.strip())
