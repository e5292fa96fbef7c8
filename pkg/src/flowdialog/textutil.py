"""Shared text helpers: tokenization and surface normalization."""

from __future__ import annotations

import string

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace.

    The same tokenizer backs both retrieval scoring and the lexical
    diversity metrics so their numbers stay comparable.
    """
    return text.lower().translate(_PUNCT_TABLE).split()


def token_set(text: str) -> frozenset[str]:
    return frozenset(tokenize(text))
