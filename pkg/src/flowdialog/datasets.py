"""Dataset loading: canonical sample files plus two importer flavours.

The canonical layout is one directory of flowchart files (edge-list JSON
or PlantUML) plus one samples file. The two importers translate released
corpus layouts into that same schema so everything downstream sees one
shape: ``(flowcharts, samples)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from flowdialog.graph import Flowchart
from flowdialog.ingest import load_edge_list
from flowdialog.plantuml import parse_plantuml


class DatasetError(ValueError):
    pass


@dataclass
class Sample:
    """One evaluation episode request.

    ``gt_turns`` overrides the ground-truth turn count used for the budget
    rule when the source corpus has real dialogue lengths; it defaults to
    the path length. ``faq_injections`` maps 1-based user-turn numbers
    (from 2) to domain questions the simulator will ask on those turns.
    """

    sample_id: str
    flowchart_id: str
    gt_path: list[str]
    faq_injections: dict[int, str] = field(default_factory=dict)
    gt_turns: int | None = None
    reference_dialogue: list[str] = field(default_factory=list)

    def effective_gt_turns(self) -> int:
        return self.gt_turns if self.gt_turns is not None else len(self.gt_path)


def _as_sample(doc: Any, index: int) -> Sample:
    where = f"sample {index}"
    if not isinstance(doc, dict):
        raise DatasetError(f"{where}: expected an object")
    fc_id = doc.get("flowchart_id")
    if not isinstance(fc_id, str) or not fc_id:
        raise DatasetError(f"{where}: needs a non-empty string flowchart_id")
    gt_path = doc.get("gt_path")
    if (
        not isinstance(gt_path, list)
        or not gt_path
        or not all(isinstance(n, str) and n for n in gt_path)
    ):
        raise DatasetError(f"{where}: gt_path must be a non-empty list of node ids")
    sample_id = doc.get("id", f"s{index}")
    if not isinstance(sample_id, str) or not sample_id:
        raise DatasetError(f"{where}: id must be a non-empty string")

    injections: dict[int, str] = {}
    raw_inj = doc.get("faq_injections", {})
    if not isinstance(raw_inj, dict):
        raise DatasetError(f"{where}: faq_injections must be an object")
    for key, question in raw_inj.items():
        try:
            turn = int(key)
        except (TypeError, ValueError):
            raise DatasetError(f"{where}: faq_injections key {key!r} is not a turn number")
        if not isinstance(question, str) or not question.strip():
            raise DatasetError(f"{where}: faq_injections[{key}] must be a non-empty question")
        injections[turn] = question

    gt_turns = doc.get("gt_turns")
    if gt_turns is not None and (not isinstance(gt_turns, int) or gt_turns < 1):
        raise DatasetError(f"{where}: gt_turns must be a positive integer")

    reference = doc.get("reference_dialogue", [])
    if not isinstance(reference, list) or not all(isinstance(t, str) for t in reference):
        raise DatasetError(f"{where}: reference_dialogue must be a list of strings")

    return Sample(
        sample_id=sample_id,
        flowchart_id=fc_id,
        gt_path=list(gt_path),
        faq_injections=injections,
        gt_turns=gt_turns,
        reference_dialogue=list(reference),
    )


def load_samples(source: Any) -> list[Sample]:
    """Parse a samples file (or already-parsed list) into :class:`Sample` rows.

    All schema problems raise eagerly, before any episode runs.
    """
    if isinstance(source, Path):
        source = json.loads(source.read_text())
    elif isinstance(source, str):
        source = json.loads(source)
    if not isinstance(source, list):
        raise DatasetError(f"samples file must hold an array, got {type(source).__name__}")
    if not source:
        raise DatasetError("samples file is empty")
    samples = [_as_sample(doc, i) for i, doc in enumerate(source)]
    seen: set[str] = set()
    for sample in samples:
        if sample.sample_id in seen:
            raise DatasetError(f"duplicate sample id {sample.sample_id!r}")
        seen.add(sample.sample_id)
    return samples


def load_flowchart_dir(directory: Path) -> dict[str, Flowchart]:
    """Load every flowchart file in a directory, keyed by flowchart id.

    ``.json`` files are edge-list documents (the id lives inside); ``.puml``
    and ``.plantuml`` files take their file stem as the id.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f"flowchart directory {directory} does not exist")
    charts: dict[str, Flowchart] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix == ".json":
            fc = load_edge_list(path)
        elif path.suffix in (".puml", ".plantuml"):
            fc = parse_plantuml(path.read_text(), fc_id=path.stem)
        else:
            continue
        if fc.id in charts:
            raise DatasetError(f"duplicate flowchart id {fc.id!r} (from {path.name})")
        charts[fc.id] = fc
    if not charts:
        raise DatasetError(f"no flowchart files found under {directory}")
    return charts


def check_samples(samples: list[Sample], charts: dict[str, Flowchart]) -> None:
    """Referential integrity pass: every sample's chart and nodes must exist."""
    for sample in samples:
        fc = charts.get(sample.flowchart_id)
        if fc is None:
            raise DatasetError(
                f"sample {sample.sample_id!r} references unknown flowchart "
                f"{sample.flowchart_id!r}"
            )
        for node in sample.gt_path:
            if not fc.has_node(node):
                raise DatasetError(
                    f"sample {sample.sample_id!r} path node {node!r} is not in "
                    f"flowchart {sample.flowchart_id!r}"
                )


def split_counts(samples: list[Sample], charts: dict[str, Flowchart]) -> tuple[int, int]:
    """(root-init, middle-init) sample counts for a loaded dataset."""
    root = sum(1 for s in samples if s.gt_path[0] == charts[s.flowchart_id].root)
    return root, len(samples) - root


def import_flodial_dir(directory: Path) -> tuple[dict[str, Flowchart], list[Sample]]:
    """FLODIAL-style layout: ``flowcharts/*.json`` plus ``dialogs.json``.

    Each dialog row carries the flowchart name, the ground-truth node path,
    and the raw utterances; user-side texts become the reference dialogue.
    """
    directory = Path(directory)
    charts = load_flowchart_dir(directory / "flowcharts")
    dialogs_path = directory / "dialogs.json"
    if not dialogs_path.is_file():
        raise DatasetError(f"missing dialogs file {dialogs_path}")
    rows = json.loads(dialogs_path.read_text())
    if not isinstance(rows, list) or not rows:
        raise DatasetError("dialogs.json must hold a non-empty array")
    samples: list[Sample] = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise DatasetError(f"dialog {i}: expected an object")
        utterances = row.get("utterances", [])
        user_turns = [
            u.get("text", "")
            for u in utterances
            if isinstance(u, dict) and u.get("speaker") == "user"
        ]
        samples.append(
            _as_sample(
                {
                    "id": str(row.get("id", f"d{i}")),
                    "flowchart_id": row.get("flowchart"),
                    "gt_path": row.get("gt_path"),
                    "gt_turns": len(user_turns) or None,
                    "reference_dialogue": user_turns,
                },
                i,
            )
        )
    seen: set[str] = set()
    for sample in samples:
        if sample.sample_id in seen:
            raise DatasetError(f"duplicate sample id {sample.sample_id!r}")
        seen.add(sample.sample_id)
    check_samples(samples, charts)
    return charts, samples


def import_pfdial_file(path: Path) -> tuple[dict[str, Flowchart], list[Sample]]:
    """PFDial-style layout: JSON-lines rows each carrying a PlantUML source.

    Rows: ``{"id", "flow", "path"}``; identical flows (same id) are parsed
    once and shared.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"missing dataset file {path}")
    charts: dict[str, Flowchart] = {}
    samples: list[Sample] = []
    for i, line in enumerate(path.read_text().splitlines()):
        if not line.strip():
            continue
        row = json.loads(line)
        if not isinstance(row, dict):
            raise DatasetError(f"row {i}: expected an object")
        flow_id = str(row.get("flow_id", row.get("id", f"p{i}")))
        source = row.get("flow")
        if not isinstance(source, str):
            raise DatasetError(f"row {i}: needs a PlantUML source under 'flow'")
        if flow_id not in charts:
            charts[flow_id] = parse_plantuml(source, fc_id=flow_id)
        samples.append(
            _as_sample(
                {"id": str(row.get("id", f"p{i}")), "flowchart_id": flow_id, "gt_path": row.get("path")},
                i,
            )
        )
    if not samples:
        raise DatasetError(f"no rows in {path}")
    seen: set[str] = set()
    for sample in samples:
        if sample.sample_id in seen:
            raise DatasetError(f"duplicate sample id {sample.sample_id!r}")
        seen.add(sample.sample_id)
    check_samples(samples, charts)
    return charts, samples
