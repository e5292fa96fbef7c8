"""Dialogue-level evaluation over grounded node sequences.

Conventions shared by every metric here: an episode's predicted sequence
starts at the node grounded on the first turn and gains one entry per
completed transition, and each transition j has a length L_j counting every
turn spent on it including the turn that completed it. Records with no
completed transition are excluded from the stay ratio and counted
separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence


@dataclass
class EpisodeRecord:
    """One evaluated episode: predicted vs ground-truth node sequences.

    ``transition_lengths[j]`` is the turn cost of the j-th completed
    transition; turns spent on a transition that never completed are not
    represented. ``turns`` is the total number of user turns and
    ``budget`` the turn ceiling the episode ran under.
    """

    sample_id: str
    predicted: list[str]
    gt: list[str]
    turns: int
    budget: int
    transition_lengths: list[int] = field(default_factory=list)
    gt_init_is_root: bool = True
    faq_turns: int = 0

    def __post_init__(self) -> None:
        if not self.predicted:
            raise ValueError("predicted sequence must be non-empty")
        if not self.gt:
            raise ValueError("ground-truth sequence must be non-empty")
        if self.turns < 1:
            raise ValueError("turns must be at least 1")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if any(length < 1 for length in self.transition_lengths):
            raise ValueError("every transition length must be at least 1")


def episode_to_record(
    turn_events: Sequence[tuple[str, str]],
    gt_path: Sequence[str],
    budget: int,
    root_id: str,
    sample_id: str = "",
) -> EpisodeRecord:
    """Fold per-turn agent outcomes into an :class:`EpisodeRecord`.

    ``turn_events`` is one ``(outcome kind, grounded node)`` pair per user
    turn, in order; the first pair comes from session start. Stay-like
    turns (stayed, faq_answered) accrue to the next completed transition's
    length; a budget_exceeded turn ends accrual with its partial work
    uncounted.
    """
    if not turn_events:
        raise ValueError("episode has no turns")
    known = ("transitioned", "reached_terminal", "stayed", "faq_answered", "budget_exceeded")
    first_kind, first_node = turn_events[0]
    if first_kind not in known:
        raise ValueError(f"unknown outcome kind {first_kind!r}")
    predicted = [first_node]
    lengths: list[int] = []
    pending = 0
    faq_turns = 1 if first_kind == "faq_answered" else 0
    for kind, node in turn_events[1:]:
        if kind in ("transitioned", "reached_terminal"):
            predicted.append(node)
            lengths.append(pending + 1)
            pending = 0
        elif kind in ("stayed", "faq_answered"):
            pending += 1
            if kind == "faq_answered":
                faq_turns += 1
        elif kind == "budget_exceeded":
            break
        else:
            raise ValueError(f"unknown outcome kind {kind!r}")
    return EpisodeRecord(
        sample_id=sample_id,
        predicted=predicted,
        gt=list(gt_path),
        turns=len(turn_events),
        budget=budget,
        transition_lengths=lengths,
        gt_init_is_root=bool(gt_path) and gt_path[0] == root_id,
        faq_turns=faq_turns,
    )


def is_subsequence(needle: Sequence[str], haystack: Sequence[str]) -> bool:
    """Order-preserving containment check (two-pointer scan)."""
    it = iter(haystack)
    return all(any(item == candidate for candidate in it) for item in needle)


class CoverageRelation(str, Enum):
    EXACT_MATCH = "exact_match"
    PREDICTION_COVERS_GT = "prediction_covers_gt"
    PREDICTION_CONTAINED_IN_GT = "prediction_contained_in_gt"
    PARTIAL_OVERLAP = "partial_overlap"
    DISJOINT = "disjoint"


def classify_coverage(gt: Sequence[str], predicted: Sequence[str]) -> CoverageRelation:
    """Assign exactly one of the five path relations, most specific first."""
    if list(gt) == list(predicted):
        return CoverageRelation.EXACT_MATCH
    if is_subsequence(gt, predicted):
        return CoverageRelation.PREDICTION_COVERS_GT
    if is_subsequence(predicted, gt):
        return CoverageRelation.PREDICTION_CONTAINED_IN_GT
    if set(gt) & set(predicted):
        return CoverageRelation.PARTIAL_OVERLAP
    return CoverageRelation.DISJOINT


def _require_records(records: Sequence[EpisodeRecord]) -> None:
    if not records:
        raise ValueError("metric needs a non-empty record list")


@dataclass
class IngaResult:
    """Initial-node accuracy, overall and split by where the ground truth starts.

    A split with no records is ``None`` (undefined), never 0.
    """

    overall: float
    root_init: float | None
    middle_init: float | None
    n_root_init: int
    n_middle_init: int


def inga(records: Sequence[EpisodeRecord]) -> IngaResult:
    """Fraction of episodes whose first predicted node matches the ground truth."""
    _require_records(records)
    hits = [r.predicted[0] == r.gt[0] for r in records]
    root = [hit for hit, r in zip(hits, records) if r.gt_init_is_root]
    middle = [hit for hit, r in zip(hits, records) if not r.gt_init_is_root]
    return IngaResult(
        overall=sum(hits) / len(hits),
        root_init=sum(root) / len(root) if root else None,
        middle_init=sum(middle) / len(middle) if middle else None,
        n_root_init=len(root),
        n_middle_init=len(middle),
    )


def tnga(records: Sequence[EpisodeRecord]) -> float:
    """Fraction of episodes ending on the ground-truth terminal node."""
    _require_records(records)
    return sum(r.predicted[-1] == r.gt[-1] for r in records) / len(records)


def pca(records: Sequence[EpisodeRecord]) -> float:
    """Fraction of episodes whose prediction covers the full ground-truth path in order."""
    _require_records(records)
    return sum(is_subsequence(r.gt, r.predicted) for r in records) / len(records)


@dataclass
class NsrResult:
    """Mean per-episode stay ratio; ``excluded`` counts zero-transition records."""

    value: float | None
    excluded: int


def nsr(records: Sequence[EpisodeRecord]) -> NsrResult:
    """Share of transition turns that were stalls: mean of sum(L-1)/sum(L)."""
    _require_records(records)
    included = [r for r in records if r.transition_lengths]
    excluded = len(records) - len(included)
    if not included:
        return NsrResult(None, excluded)
    ratios = [
        sum(l - 1 for l in r.transition_lengths) / sum(r.transition_lengths)
        for r in included
    ]
    return NsrResult(sum(ratios) / len(ratios), excluded)


def tr(records: Sequence[EpisodeRecord]) -> float:
    """Fraction of episodes that overran their turn budget."""
    _require_records(records)
    return sum(r.turns > r.budget for r in records) / len(records)


def coverage_histogram(records: Sequence[EpisodeRecord]) -> dict[str, int]:
    """Count of records per coverage relation; every relation key is present."""
    _require_records(records)
    counts = {relation.value: 0 for relation in CoverageRelation}
    for record in records:
        counts[classify_coverage(record.gt, record.predicted).value] += 1
    return counts


@dataclass
class MetricsReport:
    n_total: int
    n_root_init: int
    n_middle_init: int
    inga_overall: float
    inga_root_init: float | None
    inga_middle_init: float | None
    tnga: float
    pca: float
    nsr: float | None
    nsr_excluded: int
    tr: float
    coverage: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_root_init": self.n_root_init,
            "n_middle_init": self.n_middle_init,
            "inga_overall": self.inga_overall,
            "inga_root_init": self.inga_root_init,
            "inga_middle_init": self.inga_middle_init,
            "tnga": self.tnga,
            "pca": self.pca,
            "nsr": self.nsr,
            "nsr_excluded": self.nsr_excluded,
            "tr": self.tr,
            "coverage": dict(self.coverage),
        }


def compute_report(records: Sequence[EpisodeRecord]) -> MetricsReport:
    """All five metrics plus the coverage histogram over one record set."""
    _require_records(records)
    inga_result = inga(records)
    nsr_result = nsr(records)
    return MetricsReport(
        n_total=len(records),
        n_root_init=inga_result.n_root_init,
        n_middle_init=inga_result.n_middle_init,
        inga_overall=inga_result.overall,
        inga_root_init=inga_result.root_init,
        inga_middle_init=inga_result.middle_init,
        tnga=tnga(records),
        pca=pca(records),
        nsr=nsr_result.value,
        nsr_excluded=nsr_result.excluded,
        tr=tr(records),
        coverage=coverage_histogram(records),
    )


def _pct(value: float | None) -> str:
    return "-" if value is None else f"{value * 100:.2f}"


def render_report_table(report: MetricsReport) -> str:
    """Fixed-width text table: initialization, task success, then efficiency columns."""
    headers = [
        ("samples", str(report.n_total)),
        ("INGA-root", _pct(report.inga_root_init)),
        ("INGA-mid", _pct(report.inga_middle_init)),
        ("INGA", _pct(report.inga_overall)),
        ("TNGA", _pct(report.tnga)),
        ("PCA", _pct(report.pca)),
        ("TR", _pct(report.tr)),
        ("NSR", _pct(report.nsr)),
    ]
    group_line = (
        " " * 9
        + "| initialization                | task success    | efficiency"
    )
    name_line = " ".join(f"{name:>9}" for name, _ in headers)
    value_line = " ".join(f"{value:>9}" for _, value in headers)
    lines = [group_line, name_line, value_line, ""]
    lines.append(
        f"splits: root-init n={report.n_root_init}, middle-init n={report.n_middle_init}"
    )
    if report.nsr_excluded:
        lines.append(f"NSR excluded {report.nsr_excluded} record(s) with no transitions")
    lines.append("coverage: " + ", ".join(f"{k}={v}" for k, v in report.coverage.items()))
    return "\n".join(lines)
