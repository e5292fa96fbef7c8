"""Domain FAQ store with lexical retrieval.

Scoring is a set cosine over lowercased, punctuation-stripped token sets:
``|Q ∩ D| / sqrt(|Q| * |D|)``, which stays in [0, 1]. The scorer is a plain
callable so a denser similarity can be swapped in without touching the
store or the agent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from flowdialog.textutil import token_set


class FaqError(ValueError):
    pass


class FaqSchemaError(FaqError):
    pass


class DuplicateQuestionError(FaqError):
    def __init__(self, question: str):
        super().__init__(f"duplicate FAQ question: {question!r}")
        self.question = question


class EmptyStoreError(FaqError):
    def __init__(self) -> None:
        super().__init__("FAQ store has no entries")


@dataclass(frozen=True)
class FaqEntry:
    question: str
    answer: str
    domain: str | None = None


@dataclass(frozen=True)
class ScoredEntry:
    entry: FaqEntry
    score: float


Scorer = Callable[[frozenset[str], frozenset[str]], float]


def set_cosine(query_tokens: frozenset[str], doc_tokens: frozenset[str]) -> float:
    if not query_tokens or not doc_tokens:
        return 0.0
    overlap = len(query_tokens & doc_tokens)
    return overlap / math.sqrt(len(query_tokens) * len(doc_tokens))


class FaqStore:
    """Ordered collection of FAQ entries with a precomputed token index."""

    def __init__(self, entries: Sequence[FaqEntry] = ()):
        self.entries: list[FaqEntry] = []
        self._question_tokens: list[frozenset[str]] = []
        self._seen_questions: set[str] = set()
        for entry in entries:
            self.add(entry)

    def add(self, entry: FaqEntry) -> None:
        key = " ".join(entry.question.split()).lower()
        if key in self._seen_questions:
            raise DuplicateQuestionError(entry.question)
        self._seen_questions.add(key)
        self.entries.append(entry)
        self._question_tokens.append(token_set(entry.question))

    def __len__(self) -> int:
        return len(self.entries)

    def retrieve(self, query: str, k: int = 1, scorer: Scorer | None = None) -> list[ScoredEntry]:
        """Top-k entries by score, ties broken by insertion order.

        Raises :class:`EmptyStoreError` on an empty store so callers
        cannot mistake "no entries" for "nothing relevant".
        """
        if not self.entries:
            raise EmptyStoreError()
        if k < 1:
            raise ValueError("k must be at least 1")
        score = scorer or set_cosine
        query_tokens = token_set(query)
        scored = [
            ScoredEntry(entry, score(query_tokens, doc_tokens))
            for entry, doc_tokens in zip(self.entries, self._question_tokens)
        ]
        # sort is stable, so equal scores keep insertion order
        scored.sort(key=lambda s: -s.score)
        return scored[:k]


def ingest_faqs(docs: Any) -> FaqStore:
    """Build a store from parsed JSON, JSON text, or a file path.

    Expected shape: array of ``{"question": ..., "answer": ..., "domain"?}``.
    Duplicate questions (case- and whitespace-insensitive) are rejected.
    """
    if isinstance(docs, Path):
        docs = json.loads(docs.read_text())
    elif isinstance(docs, str):
        docs = json.loads(docs)
    if not isinstance(docs, list):
        raise FaqSchemaError(f"expected an array of entries, got {type(docs).__name__}")
    store = FaqStore()
    for i, item in enumerate(docs):
        if not isinstance(item, dict):
            raise FaqSchemaError(f"entry {i} is not an object")
        for key in ("question", "answer"):
            if not isinstance(item.get(key), str) or not item[key].strip():
                raise FaqSchemaError(f"entry {i} needs a non-empty string {key!r}")
        domain = item.get("domain")
        if domain is not None and not isinstance(domain, str):
            raise FaqSchemaError(f"entry {i} has a non-string domain")
        store.add(FaqEntry(item["question"], item["answer"], domain))
    return store
