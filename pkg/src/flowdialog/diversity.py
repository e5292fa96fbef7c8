"""Per-turn lexical diversity metrics for simulated and reference dialogues.

Each metric is computed on one turn's token list (lowercased, punctuation
stripped, whitespace split) and the report averages the per-turn values over
every turn of every sample. Turns too short for a metric's window fall back
to a whole-turn computation and are counted in the report's fallback tally.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from flowdialog.textutil import tokenize

MTLD_THRESHOLD = 0.72
MSTTR_SEGMENT = 25
HDD_SAMPLE = 42


def shannon_entropy(tokens: Sequence[str]) -> float:
    """Unigram entropy in bits over the turn's empirical distribution."""
    if not tokens:
        return 0.0
    counts = Counter(tokens)
    total = len(tokens)
    return -sum((c / total) * math.log2(c / total) for c in counts.values())


def conditional_bigram_entropy(tokens: Sequence[str]) -> float:
    """Entropy of the next token given the current one, in bits.

    Turns with fewer than two tokens have no bigrams and score 0.
    """
    if len(tokens) < 2:
        return 0.0
    bigrams = Counter(zip(tokens, tokens[1:]))
    context = Counter(tokens[:-1])
    total = len(tokens) - 1
    entropy = 0.0
    for (first, _second), count in bigrams.items():
        joint = count / total
        conditional = count / context[first]
        entropy -= joint * math.log2(conditional)
    # float rounding can leave a tiny negative residue on deterministic turns
    return max(entropy, 0.0)


def _ttr(tokens: Sequence[str]) -> float:
    return len(set(tokens)) / len(tokens)


def msttr(tokens: Sequence[str], segment: int = MSTTR_SEGMENT) -> tuple[float, bool]:
    """Mean TTR over consecutive fixed-size segments; leftovers are dropped.

    Returns ``(value, fell_back)``; turns shorter than one segment use the
    whole-turn TTR instead.
    """
    if not tokens:
        raise ValueError("msttr needs at least one token")
    if len(tokens) < segment:
        return _ttr(tokens), True
    values = []
    for start in range(0, len(tokens) - segment + 1, segment):
        values.append(_ttr(tokens[start : start + segment]))
    return sum(values) / len(values), False


def _mtld_one_direction(tokens: Sequence[str], threshold: float) -> tuple[float, bool]:
    factors = 0.0
    types: set[str] = set()
    length = 0
    for token in tokens:
        length += 1
        types.add(token)
        if len(types) / length <= threshold:
            factors += 1.0
            types = set()
            length = 0
    if length:
        remainder_ttr = len(types) / length
        factors += (1.0 - remainder_ttr) / (1.0 - threshold)
    if factors == 0.0:
        # Never dipped below the threshold; the whole turn is one
        # unfinished factor, so report its length.
        return float(len(tokens)), True
    return len(tokens) / factors, False


def mtld(tokens: Sequence[str], threshold: float = MTLD_THRESHOLD) -> tuple[float, bool]:
    """Measure of textual lexical diversity: mean of a forward and a backward pass.

    A pass counts how often the running TTR drops to the threshold, with
    the leftover stretch contributing a partial factor of
    ``(1 - ttr) / (1 - threshold)``. Passes that never complete a factor
    fall back to the token count; ``fell_back`` reports whether either
    pass did.
    """
    if not tokens:
        raise ValueError("mtld needs at least one token")
    forward, fb_forward = _mtld_one_direction(tokens, threshold)
    backward, fb_backward = _mtld_one_direction(list(reversed(tokens)), threshold)
    return (forward + backward) / 2.0, fb_forward or fb_backward


def hdd(tokens: Sequence[str], sample_size: int = HDD_SAMPLE) -> tuple[float, bool]:
    """Expected number of distinct types in a random draw of ``sample_size`` tokens.

    Exact hypergeometric computation: each type contributes its inclusion
    probability. Turns shorter than the sample size use the whole turn
    (every type then contributes 1, so the value equals the type count).
    """
    if not tokens:
        raise ValueError("hdd needs at least one token")
    total = len(tokens)
    draw = min(sample_size, total)
    denominator = math.comb(total, draw)
    expected = 0.0
    for count in Counter(tokens).values():
        absent = math.comb(total - count, draw)
        expected += 1.0 - absent / denominator
    return expected, draw < sample_size


@dataclass
class DiversityReport:
    """Grand means of the per-turn metrics plus bookkeeping on fallbacks."""

    se: float
    ce: float
    msttr: float
    mtld: float
    hdd: float
    turns: int
    fallbacks: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "se": self.se,
            "ce": self.ce,
            "msttr": self.msttr,
            "mtld": self.mtld,
            "hdd": self.hdd,
            "turns": self.turns,
            "fallbacks": dict(self.fallbacks),
        }


def compute_diversity(sample_turns: Sequence[Sequence[str]]) -> DiversityReport:
    """Average the five per-turn metrics over every turn of every sample.

    ``sample_turns`` holds one list of user-turn strings per sample.
    Turns that tokenize to nothing are skipped and tallied.
    """
    se_values: list[float] = []
    ce_values: list[float] = []
    msttr_values: list[float] = []
    mtld_values: list[float] = []
    hdd_values: list[float] = []
    fallbacks = {"msttr_whole_turn": 0, "mtld_no_factor": 0, "hdd_small_turn": 0, "empty_turns": 0}
    for turns in sample_turns:
        for turn in turns:
            tokens = tokenize(turn)
            if not tokens:
                fallbacks["empty_turns"] += 1
                continue
            se_values.append(shannon_entropy(tokens))
            ce_values.append(conditional_bigram_entropy(tokens))
            value, fell_back = msttr(tokens)
            msttr_values.append(value)
            fallbacks["msttr_whole_turn"] += fell_back
            value, fell_back = mtld(tokens)
            mtld_values.append(value)
            fallbacks["mtld_no_factor"] += fell_back
            value, fell_back = hdd(tokens)
            hdd_values.append(value)
            fallbacks["hdd_small_turn"] += fell_back
    if not se_values:
        raise ValueError("no non-empty turns to evaluate")
    count = len(se_values)
    return DiversityReport(
        se=sum(se_values) / count,
        ce=sum(ce_values) / count,
        msttr=sum(msttr_values) / count,
        mtld=sum(mtld_values) / count,
        hdd=sum(hdd_values) / count,
        turns=count,
        fallbacks=fallbacks,
    )
