"""User simulators that walk the agent along a chosen ground-truth path.

A profile pins the scenario: the goal path's per-node answer conditions,
plus background facts (the conditions leading from the root) when the
scenario starts mid-chart. The scripted simulator is fully deterministic:
it finds which profile node the agent's last utterance is asking about (by
normalized containment of the node attribute) and answers with that node's
condition text verbatim. The model-backed simulator feeds the same profile
through a binding instead.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from flowdialog.gateway import ChatMessage, ModelBinding, complete
from flowdialog.graph import Flowchart, normalize_condition


class SimulatorError(Exception):
    pass


class InvalidPathError(SimulatorError, ValueError):
    pass


class OffPathError(SimulatorError, RuntimeError):
    """The agent asked about something outside the scenario's remaining path."""

    def __init__(self, agent_utterance: str):
        super().__init__(
            f"agent utterance matches no pending profile node: {agent_utterance!r}"
        )
        self.agent_utterance = agent_utterance


@dataclass(frozen=True)
class ProfileStep:
    node: str
    attr: str
    cond: str | None  # answer to give at this node; None on the goal terminal


@dataclass
class SimulatorProfile:
    """Scenario for one episode.

    ``background`` covers root-to-start when the ground truth starts off
    the root; ``goal`` covers the ground-truth path itself.
    """

    flowchart_id: str
    background: list[ProfileStep] = field(default_factory=list)
    goal: list[ProfileStep] = field(default_factory=list)

    @property
    def steps(self) -> list[ProfileStep]:
        return [*self.background, *self.goal]

    @property
    def first_condition(self) -> str | None:
        return self.goal[0].cond if self.goal else None


def _edge_condition(flowchart: Flowchart, src: str, dst: str) -> str | None:
    for edge in flowchart.out_edges(src):
        if edge.dst == dst:
            return edge.cond
    return None


def _prefix_path(flowchart: Flowchart, target: str) -> list[str]:
    # BFS over declaration-ordered edges gives a deterministic shortest
    # route from the root to the scenario's starting node.
    if target == flowchart.root:
        return [target]
    parents: dict[str, str] = {}
    queue = deque([flowchart.root])
    while queue:
        current = queue.popleft()
        for edge in flowchart.out_edges(current):
            if edge.dst in parents or edge.dst == flowchart.root:
                continue
            parents[edge.dst] = current
            if edge.dst == target:
                path = [target]
                while path[-1] != flowchart.root:
                    path.append(parents[path[-1]])
                return list(reversed(path))
            queue.append(edge.dst)
    raise InvalidPathError(f"no route from root to scenario start {target!r}")


def build_profile(flowchart: Flowchart, gt_path: Sequence[str]) -> SimulatorProfile:
    """Resolve a ground-truth node path into a full scenario profile.

    The path must be non-empty, edge-connected, and end on a terminal.
    When it starts below the root, the background steps carry the
    conditions that lead there.
    """
    if not gt_path:
        raise InvalidPathError("ground-truth path is empty")
    for node in gt_path:
        if not flowchart.has_node(node):
            raise InvalidPathError(f"path node {node!r} is not in flowchart {flowchart.id!r}")
    goal: list[ProfileStep] = []
    for i, node in enumerate(gt_path):
        if i + 1 < len(gt_path):
            cond = _edge_condition(flowchart, node, gt_path[i + 1])
            if cond is None:
                raise InvalidPathError(
                    f"path step {node!r} -> {gt_path[i + 1]!r} is not an edge"
                )
        else:
            cond = None
        goal.append(ProfileStep(node, flowchart.node_attr(node), cond))
    if not flowchart.terminal_check(gt_path[-1]):
        raise InvalidPathError(f"path must end on a terminal node, got {gt_path[-1]!r}")

    background: list[ProfileStep] = []
    if gt_path[0] != flowchart.root:
        prefix = _prefix_path(flowchart, gt_path[0])
        for src, dst in zip(prefix, prefix[1:]):
            cond = _edge_condition(flowchart, src, dst)
            assert cond is not None  # prefix came from actual edges
            background.append(ProfileStep(src, flowchart.node_attr(src), cond))
    return SimulatorProfile(flowchart.id, background, goal)


def _validate_injections(faq_injections: dict[int, str] | None) -> dict[int, str]:
    injections = dict(faq_injections or {})
    for turn, question in injections.items():
        if not isinstance(turn, int) or turn < 2:
            raise ValueError(f"FAQ injections start at turn 2, got {turn!r}")
        if not question.strip():
            raise ValueError("FAQ injection question is empty")
    return injections


class ScriptedSimulator:
    """Deterministic scenario player.

    ``next_user_utterance`` returns ``None`` once the agent has announced
    the goal terminal (the scenario is over), and raises
    :class:`OffPathError` when the agent asks about a node the remaining
    scenario does not contain.
    """

    def __init__(self, profile: SimulatorProfile, faq_injections: dict[int, str] | None = None):
        self.profile = profile
        self.faq_injections = _validate_injections(faq_injections)
        self._steps = profile.steps
        self._cursor = 0
        self.turn = 0

    def first_utterance(self) -> str:
        """Background facts plus the first answer condition, as one opener."""
        self.turn = 1
        parts = [s.cond for s in self.profile.background]
        parts.append(self.profile.first_condition)
        text = ", ".join(p for p in parts if p)
        return text if text else "I need help with this."

    def next_user_utterance(self, agent_utterance: str) -> str | None:
        self.turn += 1
        if self.turn in self.faq_injections:
            return self.faq_injections[self.turn]
        asked = normalize_condition(agent_utterance)
        for i in range(self._cursor, len(self._steps)):
            step = self._steps[i]
            if normalize_condition(step.attr) in asked:
                if step.cond is None:
                    return None  # goal terminal acknowledged
                self._cursor = i
                return step.cond
        raise OffPathError(agent_utterance)


_SIM_SYSTEM = (
    "You play the user in a troubleshooting chat. Stay consistent with the "
    "scenario facts; answer the assistant's current question and nothing else."
)


class LlmSimulator:
    """Model-backed scenario player with the same interface as the scripted one."""

    def __init__(
        self,
        profile: SimulatorProfile,
        binding: ModelBinding,
        faq_injections: dict[int, str] | None = None,
        temperature: float = 0.7,
    ):
        self.profile = profile
        self.binding = binding
        self.faq_injections = _validate_injections(faq_injections)
        self.temperature = temperature
        self.turn = 0
        self._transcript: list[tuple[str, str]] = []  # (speaker, text)

    def _scenario_lines(self) -> list[str]:
        lines = ["Scenario facts, in flow order:"]
        for step in self.profile.background:
            lines.append(f"- about '{step.attr}': {step.cond}")
        for step in self.profile.goal:
            if step.cond is not None:
                lines.append(f"- about '{step.attr}': {step.cond}")
        return lines

    def first_utterance(self) -> str:
        self.turn = 1
        messages = [
            ChatMessage("system", _SIM_SYSTEM),
            ChatMessage(
                "user",
                "\n".join(
                    [
                        "[simulate-first]",
                        *self._scenario_lines(),
                        "Open the conversation as the user describing the situation "
                        "in your own words.",
                    ]
                ),
            ),
        ]
        text = complete(self.binding, messages, temperature=self.temperature).strip()
        self._transcript.append(("user", text))
        return text

    def next_user_utterance(self, agent_utterance: str) -> str | None:
        self.turn += 1
        self._transcript.append(("assistant", agent_utterance))
        if self.turn in self.faq_injections:
            text = self.faq_injections[self.turn]
            self._transcript.append(("user", text))
            return text
        convo = [f"{speaker}: {text}" for speaker, text in self._transcript]
        messages = [
            ChatMessage("system", _SIM_SYSTEM),
            ChatMessage(
                "user",
                "\n".join(
                    [
                        "[simulate-turn]",
                        *self._scenario_lines(),
                        "Conversation so far:",
                        *convo,
                        "Reply with the user's next message only, or END if the "
                        "assistant has wrapped up the flow.",
                    ]
                ),
            ),
        ]
        text = complete(self.binding, messages, temperature=self.temperature).strip()
        if text.upper() == "END":
            return None
        self._transcript.append(("user", text))
        return text
