"""Episode orchestration: runs agent-vs-simulator suites and writes artifacts.

One episode alternates simulator and agent turns from the opener until the
goal terminal, an END, or the budget. A suite fans episodes out over a
thread pool, folds the completed records through the evaluation module, and
writes a report that is byte-identical across runs when every binding is
scripted and the seed is fixed (nothing time- or id-random ends up in the
artifacts on that path).
"""

from __future__ import annotations

import json
import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from flowdialog.agent import AgentConfig, start, step
from flowdialog.datasets import (
    DatasetError,
    Sample,
    check_samples,
    load_flowchart_dir,
    load_samples,
)
from flowdialog.simulator import InvalidPathError
from flowdialog.diversity import DiversityReport, compute_diversity
from flowdialog.faq import FaqStore, ingest_faqs
from flowdialog.gateway import GatewayError, ModelBinding, RemoteBinding, ScriptedBinding
from flowdialog.graph import Flowchart
from flowdialog.metrics import (
    EpisodeRecord,
    MetricsReport,
    compute_report,
    episode_to_record,
    render_report_table,
)
from flowdialog.simulator import (
    LlmSimulator,
    OffPathError,
    ScriptedSimulator,
    build_profile,
)

TRANSCRIPT_SCHEMA = 1


class HarnessError(Exception):
    pass


class MalformedLogError(HarnessError):
    pass


class NoFaqExchangesError(HarnessError):
    def __init__(self) -> None:
        super().__init__("no FAQ exchanges found in the given logs")


def build_binding(cfg: dict[str, Any]) -> ModelBinding:
    """Instantiate a binding from its config stanza.

    ``{"kind": "scripted", "responses"?, "default"?}`` or
    ``{"kind": "remote", "endpoint", "model", "api_key_env"?, "timeout"?}``.
    Credentials stay in the environment; the config only names the variable.
    """
    kind = cfg.get("kind")
    if kind == "scripted":
        return ScriptedBinding(cfg.get("responses"), default=cfg.get("default", "NONE"))
    if kind == "remote":
        for key in ("endpoint", "model"):
            if not isinstance(cfg.get(key), str) or not cfg[key]:
                raise HarnessError(f"remote binding config needs a non-empty {key!r}")
        return RemoteBinding(
            cfg["endpoint"],
            cfg["model"],
            api_key_env=cfg.get("api_key_env", "FLOWDIALOG_API_KEY"),
            timeout=float(cfg.get("timeout", 30.0)),
        )
    raise HarnessError(f"unknown binding kind {kind!r}")


@dataclass
class RunConfig:
    """Suite settings, loadable from a JSON file.

    The turn budget is ``fixed_budget`` when set, otherwise
    ``budget_multiplier`` times the sample's ground-truth turn count.
    """

    dataset: Path
    flowchart_dir: Path
    faq_path: Path | None = None
    budget_multiplier: float = 2.0
    fixed_budget: int | None = None
    parallelism: int = 1
    seed: int = 0
    out_dir: Path | None = None
    agent_binding: dict[str, Any] = field(default_factory=lambda: {"kind": "scripted"})
    simulator_binding: dict[str, Any] | None = None  # None = scripted scenario player
    faq_threshold: float = 0.2
    max_selfloop_hops: int | None = None

    def __post_init__(self) -> None:
        if self.budget_multiplier <= 0:
            raise ValueError("budget_multiplier must be positive")
        if self.fixed_budget is not None and self.fixed_budget < 1:
            raise ValueError("fixed_budget must be at least 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")

    def budget_for(self, sample: Sample) -> int:
        if self.fixed_budget is not None:
            return self.fixed_budget
        return max(1, math.floor(self.budget_multiplier * sample.effective_gt_turns()))


def load_run_config(path: Path, **overrides: Any) -> RunConfig:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise HarnessError("run config must be a JSON object")
    known = {
        "dataset",
        "flowchart_dir",
        "faq_path",
        "budget_multiplier",
        "fixed_budget",
        "parallelism",
        "seed",
        "out_dir",
        "agent_binding",
        "simulator_binding",
        "faq_threshold",
        "max_selfloop_hops",
    }
    unknown = set(doc) - known
    if unknown:
        raise HarnessError(f"unknown run config keys: {sorted(unknown)}")
    doc.update(overrides)
    for key in ("dataset", "flowchart_dir", "faq_path", "out_dir"):
        if doc.get(key) is not None:
            doc[key] = Path(doc[key])
    if "dataset" not in doc or "flowchart_dir" not in doc:
        raise HarnessError("run config needs 'dataset' and 'flowchart_dir'")
    return RunConfig(**doc)


@dataclass
class EpisodeResult:
    sample_id: str
    status: str  # completed | failed
    reason: str | None
    record: EpisodeRecord | None
    transcript: list[dict[str, Any]]
    user_turns: list[str]


def _transcript_header(sample: Sample, fc: Flowchart, budget: int) -> dict[str, Any]:
    return {
        "kind": "header",
        "schema": TRANSCRIPT_SCHEMA,
        "sample_id": sample.sample_id,
        "flowchart_id": fc.id,
        "root": fc.root,
        "gt_path": list(sample.gt_path),
        "budget": budget,
    }


def run_episode(
    fc: Flowchart,
    sample: Sample,
    cfg: RunConfig,
    agent_binding: ModelBinding,
    simulator_binding: ModelBinding | None = None,
    faq_store: FaqStore | None = None,
) -> EpisodeResult:
    """Drive one full episode and fold it into an :class:`EpisodeRecord`.

    Gateway failures (already retried inside the binding) and off-path
    simulator errors mark the episode failed with a reason instead of
    aborting the suite. Timing is recorded only on non-scripted turns so
    scripted artifacts stay reproducible.
    """
    budget = cfg.budget_for(sample)
    lines: list[dict[str, Any]] = [_transcript_header(sample, fc, budget)]
    user_turns: list[str] = []
    record_timing = not (agent_binding.is_scripted and simulator_binding is None)

    try:
        profile = build_profile(fc, sample.gt_path)
        if simulator_binding is None:
            sim: ScriptedSimulator | LlmSimulator = ScriptedSimulator(
                profile, sample.faq_injections
            )
        else:
            sim = LlmSimulator(profile, simulator_binding, sample.faq_injections)
        agent_cfg = AgentConfig(
            turn_budget=budget,
            max_selfloop_hops=cfg.max_selfloop_hops,
            faq_threshold=cfg.faq_threshold,
        )

        utterance: str | None = sim.first_utterance()
        started = time.perf_counter()
        state, outcome = start(fc, utterance, agent_binding, agent_cfg)
        while True:
            user_turns.append(utterance)  # type: ignore[arg-type]
            lines.append(
                {"kind": "turn", "turn": state.turn, "speaker": "user", "text": utterance}
            )
            agent_line: dict[str, Any] = {
                "kind": "turn",
                "turn": state.turn,
                "speaker": "agent",
                "text": outcome.utterance,
                "node": outcome.node,
                "outcome": outcome.kind,
            }
            if outcome.hops:
                agent_line["hops"] = outcome.hops
            if record_timing:
                agent_line["elapsed_ms"] = round((time.perf_counter() - started) * 1000, 3)
            lines.append(agent_line)
            if state.phase.value != "active":
                break
            utterance = sim.next_user_utterance(outcome.utterance)
            if utterance is None:
                break
            started = time.perf_counter()
            outcome = step(state, utterance, agent_binding, faq_store)
    except OffPathError as err:
        return EpisodeResult(
            sample.sample_id, "failed", f"off_path: {err.agent_utterance}", None, lines, user_turns
        )
    except InvalidPathError as err:
        return EpisodeResult(
            sample.sample_id, "failed", f"invalid_path: {err}", None, lines, user_turns
        )
    except GatewayError as err:
        return EpisodeResult(
            sample.sample_id, "failed", f"gateway: {err}", None, lines, user_turns
        )

    record = episode_to_record(
        state.turn_events, sample.gt_path, budget, fc.root, sample.sample_id
    )
    return EpisodeResult(sample.sample_id, "completed", None, record, lines, user_turns)


def write_transcript(path: Path, lines: Iterable[dict[str, Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for line in lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")


def read_transcript(path: Path) -> list[dict[str, Any]]:
    lines: list[dict[str, Any]] = []
    for i, raw in enumerate(Path(path).read_text().splitlines()):
        if not raw.strip():
            continue
        try:
            lines.append(json.loads(raw))
        except json.JSONDecodeError as err:
            raise MalformedLogError(f"{path}:{i + 1}: not valid JSON ({err})") from err
    if not lines:
        raise MalformedLogError(f"{path}: empty log")
    return lines


def _parse_log(lines: Sequence[dict[str, Any]], origin: str = "log") -> tuple[dict, list[dict]]:
    header = lines[0]
    if header.get("kind") != "header":
        raise MalformedLogError(f"{origin}: first line must be the header")
    if header.get("schema") != TRANSCRIPT_SCHEMA:
        raise MalformedLogError(
            f"{origin}: unsupported schema version {header.get('schema')!r}"
        )
    for key in ("sample_id", "flowchart_id", "root", "gt_path", "budget"):
        if key not in header:
            raise MalformedLogError(f"{origin}: header is missing {key!r}")
    agent_lines = []
    expected_turn = 1
    for line in lines[1:]:
        if line.get("kind") != "turn":
            raise MalformedLogError(f"{origin}: unexpected line kind {line.get('kind')!r}")
        if line.get("speaker") == "agent":
            if line.get("turn") != expected_turn:
                raise MalformedLogError(
                    f"{origin}: agent turns out of order at turn {line.get('turn')!r}"
                )
            if "outcome" not in line or "node" not in line:
                raise MalformedLogError(f"{origin}: agent line missing outcome or node")
            agent_lines.append(line)
            expected_turn += 1
    if not agent_lines:
        raise MalformedLogError(f"{origin}: log has no agent turns")
    return header, agent_lines


def replay(log: Path | Sequence[dict[str, Any]]) -> EpisodeRecord:
    """Rebuild the :class:`EpisodeRecord` a live run produced, from its log."""
    if isinstance(log, (str, Path)):
        lines = read_transcript(Path(log))
        origin = str(log)
    else:
        lines = list(log)
        origin = "log"
    header, agent_lines = _parse_log(lines, origin)
    events = [(line["outcome"], line["node"]) for line in agent_lines]
    try:
        return episode_to_record(
            events,
            header["gt_path"],
            header["budget"],
            header["root"],
            header["sample_id"],
        )
    except ValueError as err:
        raise MalformedLogError(f"{origin}: {err}") from err


def faq_local_accuracy(logs: Sequence[Path | Sequence[dict[str, Any]]]) -> float:
    """Fraction of FAQ exchanges that resume on the correct next-hop node.

    An exchange is a maximal run of consecutive faq_answered turns. It
    counts as correct when the first transition after it lands on the
    ground-truth node that was due next at that point (tracked by
    subsequence progress through the ground-truth path). Exchanges with no
    following transition count as incorrect.
    """
    exchanges = 0
    correct = 0
    for log in logs:
        if isinstance(log, (str, Path)):
            lines = read_transcript(Path(log))
        else:
            lines = list(log)
        header, agent_lines = _parse_log(lines)
        gt_path = list(header["gt_path"])
        events = [(line["outcome"], line["node"]) for line in agent_lines]

        progress = 0  # next gt index to match
        first_node = events[0][1]
        if progress < len(gt_path) and first_node == gt_path[progress]:
            progress += 1
        i = 1
        while i < len(events):
            kind, node = events[i]
            if kind == "faq_answered":
                run_progress = progress
                while i < len(events) and events[i][0] == "faq_answered":
                    i += 1
                resumed = None
                for later_kind, later_node in events[i:]:
                    if later_kind in ("transitioned", "reached_terminal"):
                        resumed = later_node
                        break
                exchanges += 1
                if (
                    resumed is not None
                    and run_progress < len(gt_path)
                    and resumed == gt_path[run_progress]
                ):
                    correct += 1
                continue
            if kind in ("transitioned", "reached_terminal"):
                if progress < len(gt_path) and node == gt_path[progress]:
                    progress += 1
            i += 1
    if exchanges == 0:
        raise NoFaqExchangesError()
    return correct / exchanges


@dataclass
class SuiteResult:
    report: MetricsReport | None
    diversity: DiversityReport | None
    faq_accuracy: float | None
    results: list[EpisodeResult]

    @property
    def failures(self) -> dict[str, str]:
        return {
            r.sample_id: r.reason or "unknown"
            for r in self.results
            if r.status != "completed"
        }


def run_suite(cfg: RunConfig) -> SuiteResult:
    """Run every sample in the dataset and aggregate the completed episodes.

    Dataset and schema problems surface before any episode runs. The seed
    fixes the execution order; results are re-sorted by sample id before
    aggregation and writing, so parallelism cannot change any artifact.
    """
    charts = load_flowchart_dir(cfg.flowchart_dir)
    samples = load_samples(cfg.dataset)
    check_samples(samples, charts)
    for sample in samples:
        try:
            build_profile(charts[sample.flowchart_id], sample.gt_path)
        except InvalidPathError as err:
            raise DatasetError(f"sample {sample.sample_id!r}: {err}") from err
    faq_store = ingest_faqs(cfg.faq_path) if cfg.faq_path else None

    order = list(samples)
    random.Random(cfg.seed).shuffle(order)

    def one(sample: Sample) -> EpisodeResult:
        # bindings are built per episode so scripted call logs stay isolated
        agent_binding = build_binding(cfg.agent_binding)
        sim_binding = (
            build_binding(cfg.simulator_binding) if cfg.simulator_binding else None
        )
        return run_episode(
            charts[sample.flowchart_id], sample, cfg, agent_binding, sim_binding, faq_store
        )

    if cfg.parallelism == 1:
        results = [one(sample) for sample in order]
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            results = list(pool.map(one, order))
    results.sort(key=lambda r: r.sample_id)

    records = [r.record for r in results if r.record is not None]
    report = compute_report(records) if records else None
    all_user_turns = [r.user_turns for r in results if r.user_turns]
    try:
        diversity: DiversityReport | None = compute_diversity(all_user_turns)
    except ValueError:
        diversity = None
    try:
        faq_accuracy: float | None = faq_local_accuracy(
            [r.transcript for r in results if r.status == "completed"]
        )
    except (NoFaqExchangesError, MalformedLogError):
        faq_accuracy = None

    suite = SuiteResult(report, diversity, faq_accuracy, results)
    if cfg.out_dir is not None:
        _write_artifacts(cfg, suite)
    return suite


def suite_report_dict(cfg: RunConfig, suite: SuiteResult) -> dict[str, Any]:
    return {
        "config": {
            "seed": cfg.seed,
            "budget_multiplier": cfg.budget_multiplier,
            "fixed_budget": cfg.fixed_budget,
            "parallelism": cfg.parallelism,
            "faq_threshold": cfg.faq_threshold,
        },
        "n_samples": len(suite.results),
        "n_completed": sum(r.status == "completed" for r in suite.results),
        "failures": suite.failures,
        "metrics": suite.report.to_dict() if suite.report else None,
        "diversity": suite.diversity.to_dict() if suite.diversity else None,
        "faq_local_accuracy": suite.faq_accuracy,
    }


def render_suite_text(cfg: RunConfig, suite: SuiteResult) -> str:
    parts: list[str] = []
    if suite.report is not None:
        parts.append(render_report_table(suite.report))
    else:
        parts.append("no completed episodes")
    if suite.faq_accuracy is not None:
        parts.append(f"FAQ local accuracy: {suite.faq_accuracy * 100:.2f}")
    if suite.diversity is not None:
        d = suite.diversity
        parts.append(
            "user-turn diversity: "
            f"SE={d.se:.4f} CE={d.ce:.4f} MSTTR={d.msttr:.4f} "
            f"MTLD={d.mtld:.4f} HDD={d.hdd:.4f} over {d.turns} turns"
        )
    if suite.failures:
        parts.append("failed episodes:")
        for sample_id, reason in sorted(suite.failures.items()):
            parts.append(f"  {sample_id}: {reason}")
    return "\n".join(parts) + "\n"


def _write_artifacts(cfg: RunConfig, suite: SuiteResult) -> None:
    out = Path(cfg.out_dir)  # type: ignore[arg-type]
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(suite_report_dict(cfg, suite), sort_keys=True, indent=2) + "\n"
    )
    (out / "report.txt").write_text(render_suite_text(cfg, suite))
    records = [r.record for r in suite.results if r.record is not None]
    (out / "records.json").write_text(
        json.dumps(
            [
                {
                    "sample_id": rec.sample_id,
                    "predicted": rec.predicted,
                    "gt": rec.gt,
                    "turns": rec.turns,
                    "budget": rec.budget,
                    "transition_lengths": rec.transition_lengths,
                    "gt_init_is_root": rec.gt_init_is_root,
                    "faq_turns": rec.faq_turns,
                }
                for rec in records
            ],
            sort_keys=True,
            indent=2,
        )
        + "\n"
    )
    for result in suite.results:
        write_transcript(out / "transcripts" / f"{result.sample_id}.jsonl", result.transcript)
