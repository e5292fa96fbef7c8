"""Model access for the dialogue stack: one remote HTTP kind, one scripted kind.

Everything above this module talks to a :class:`ModelBinding` and never to a
vendor SDK. The scripted kind makes whole subsystems deterministic for tests
and offline runs: prompts carry a canonical tag line (the first line of the
final user message) and the binding maps that tag to a fixed response.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import requests

from flowdialog.graph import normalize_condition


class GatewayError(Exception):
    """Base class for model-access failures."""


class TransportError(GatewayError):
    pass


class RateLimitError(GatewayError):
    pass


class MalformedResponseError(GatewayError):
    pass


class UnparseableVerdictError(GatewayError):
    pass


_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


def validate_messages(messages: Sequence[ChatMessage]) -> None:
    """Enforce the conversation shape every binding expects.

    An optional system message may lead; after it, roles must alternate
    user/assistant and the final message must be from the user.
    """
    if not messages:
        raise ValueError("empty message list")
    for msg in messages:
        if msg.role not in _ROLES:
            raise ValueError(f"unknown role {msg.role!r}")
        if not isinstance(msg.content, str) or not msg.content:
            raise ValueError("message content must be a non-empty string")
    body = list(messages)
    if body[0].role == "system":
        body = body[1:]
    if not body:
        raise ValueError("conversation needs at least one user message")
    for i, msg in enumerate(body):
        expected = "user" if i % 2 == 0 else "assistant"
        if msg.role != expected:
            raise ValueError(
                f"roles must alternate user/assistant; position {i} is {msg.role!r}"
            )
    if body[-1].role != "user":
        raise ValueError("final message must come from the user")


def prompt_key(messages: Sequence[ChatMessage]) -> str:
    """Canonical routing key: the first line of the final user message."""
    return messages[-1].content.splitlines()[0].strip()


class ModelBinding:
    """Interface all model kinds implement."""

    is_scripted = False

    def complete(self, messages: Sequence[ChatMessage], temperature: float = 0.0) -> str:
        raise NotImplementedError


class ScriptedBinding(ModelBinding):
    """Deterministic test double: canonical prompt key -> fixed response.

    Unmapped keys fall back to ``default``. Every call is recorded on
    ``calls`` so tests can assert on prompt construction.
    """

    is_scripted = True

    def __init__(self, responses: dict[str, str] | None = None, default: str = "NONE"):
        self.responses = dict(responses or {})
        self.default = default
        self.calls: list[list[ChatMessage]] = []

    def complete(self, messages: Sequence[ChatMessage], temperature: float = 0.0) -> str:
        validate_messages(messages)
        self.calls.append(list(messages))
        return self.responses.get(prompt_key(messages), self.default)


class RemoteBinding(ModelBinding):
    """Chat-completion endpoint access with bounded retries.

    The credential is named indirectly (``api_key_env``) and read from the
    environment at call time; it is never stored on the instance and never
    appears in ``repr``. Retries: 3 attempts with exponential backoff
    starting at 0.5 s. HTTP 429 maps to :class:`RateLimitError`, other
    transport failures to :class:`TransportError`.
    """

    RETRIES = 3
    BACKOFF_BASE = 0.5

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "FLOWDIALOG_API_KEY",
        timeout: float = 30.0,
        session: requests.Session | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self._session = session or requests.Session()
        self._sleep = sleeper

    def __repr__(self) -> str:
        return f"RemoteBinding(endpoint={self.endpoint!r}, model={self.model!r})"

    def complete(self, messages: Sequence[ChatMessage], temperature: float = 0.0) -> str:
        validate_messages(messages)
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": temperature,
        }
        last_error: GatewayError | None = None
        for attempt in range(self.RETRIES):
            if attempt:
                self._sleep(self.BACKOFF_BASE * (2 ** (attempt - 1)))
            try:
                response = self._session.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = TransportError(str(exc))
                continue
            if response.status_code == 429:
                last_error = RateLimitError("rate limited by endpoint")
                continue
            if response.status_code >= 500:
                last_error = TransportError(f"server error {response.status_code}")
                continue
            if response.status_code != 200:
                raise TransportError(f"unexpected status {response.status_code}")
            return self._extract_text(response)
        assert last_error is not None
        raise last_error

    @staticmethod
    def _extract_text(response: requests.Response) -> str:
        try:
            data = response.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"cannot extract completion text: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedResponseError("completion content is not a string")
        return text


def complete(
    binding: ModelBinding, messages: Sequence[ChatMessage], temperature: float = 0.0
) -> str:
    """Run one completion after validating the conversation shape."""
    validate_messages(messages)
    return binding.complete(messages, temperature=temperature)


def _loose_normalize(text: str) -> str:
    # Model output tends to pick up stray quotation and sentence
    # punctuation around the label; strip it before comparing.
    return normalize_condition(text.strip().strip("\"'`").rstrip(".,!?;:").strip("\"'`"))


def structured_choice(
    binding: ModelBinding,
    messages: Sequence[ChatMessage],
    allowed: Sequence[str],
) -> str | None:
    """Force a completion onto a closed label set.

    Returns the matching element of ``allowed`` or ``None`` when the raw
    output resolves to nothing (or ambiguously to several labels).
    Matching is exact on the normalized forms; decoding runs at
    temperature 0.
    """
    raw = complete(binding, messages, temperature=0.0)
    cleaned = _loose_normalize(raw)
    if not cleaned:
        return None
    matches = [label for label in allowed if _loose_normalize(label) == cleaned]
    if len(matches) == 1:
        return matches[0]
    return None


@dataclass
class JudgeVerdict:
    """Outcome of a faithfulness check over simulated user turns."""

    violations: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


_JUDGE_TAG = "[judge-faithfulness]"

_JUDGE_INSTRUCTIONS = (
    "The reference user turns below are factual constraints: they state what is "
    "actually true of the user's situation. Check each candidate turn against "
    "them. Reply with exactly NO_VIOLATIONS if every candidate turn is "
    "consistent with the constraints; otherwise reply with one line per "
    "problem in the form '<candidate turn number>: <why it contradicts>'."
)


def judge_faithfulness(
    binding: ModelBinding,
    reference_turns: Sequence[str],
    candidate_turns: Sequence[str],
) -> JudgeVerdict:
    """Ask a model whether simulated turns contradict the reference turns.

    Raises :class:`UnparseableVerdictError` when the model's answer fits
    neither the NO_VIOLATIONS form nor the numbered-violation form.
    """
    lines = [_JUDGE_TAG, _JUDGE_INSTRUCTIONS, "", "Reference turns:"]
    lines += [f"- {turn}" for turn in reference_turns]
    lines += ["", "Candidate turns:"]
    lines += [f"{i}: {turn}" for i, turn in enumerate(candidate_turns, 1)]
    raw = complete(binding, [ChatMessage("user", "\n".join(lines))], temperature=0.0)
    stripped = raw.strip()
    if stripped.upper().replace(" ", "_") == "NO_VIOLATIONS":
        return JudgeVerdict()
    violations: list[tuple[int, str]] = []
    for line in stripped.splitlines():
        line = line.strip()
        if not line:
            continue
        head, sep, explanation = line.partition(":")
        if not sep or not head.strip().isdigit() or not explanation.strip():
            raise UnparseableVerdictError(f"cannot parse judge line {line!r}")
        violations.append((int(head.strip()), explanation.strip()))
    if not violations:
        raise UnparseableVerdictError("judge returned an empty verdict")
    return JudgeVerdict(violations)
