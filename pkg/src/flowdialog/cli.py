"""Command-line entry points: validate, run, replay, report, chat, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from flowdialog.agent import AgentConfig, AgentPhase, start, step
from flowdialog.datasets import load_flowchart_dir
from flowdialog.faq import ingest_faqs
from flowdialog.graph import Flowchart
from flowdialog.harness import (
    RunConfig,
    build_binding,
    load_run_config,
    replay as replay_log,
    render_suite_text,
    run_suite,
)
from flowdialog.ingest import FlowchartValidationError, load_edge_list
from flowdialog.metrics import EpisodeRecord, compute_report, render_report_table
from flowdialog.plantuml import PlantUmlError, parse_plantuml


@click.group()
def main() -> None:
    """Flowchart-grounded dialogue toolkit."""


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
def validate(paths: tuple[Path, ...]) -> None:
    """Check flowchart files; lists violations instead of stopping at the first."""
    failed = False
    targets: list[Path] = []
    for path in paths:
        if path.is_dir():
            targets.extend(sorted(p for p in path.iterdir() if p.suffix in (".json", ".puml", ".plantuml")))
        else:
            targets.append(path)
    for path in targets:
        try:
            if path.suffix == ".json":
                fc = load_edge_list(path)
            else:
                fc = parse_plantuml(path.read_text(), fc_id=path.stem)
            click.echo(f"{path}: OK ({fc.id}, {len(fc.node_ids)} nodes)")
        except FlowchartValidationError as err:
            failed = True
            click.echo(f"{path}: INVALID")
            for violation in err.violations:
                click.echo(f"  {violation.code}: {violation.message}")
        except (PlantUmlError, ValueError) as err:
            failed = True
            click.echo(f"{path}: ERROR {err}")
    if failed:
        sys.exit(1)


def _config_from_flags(
    config: Path | None,
    dataset: Path | None,
    flowcharts: Path | None,
    faq: Path | None,
    budget_multiplier: float | None,
    seed: int | None,
    parallel: int | None,
    out: Path | None,
) -> RunConfig:
    overrides = {}
    if dataset is not None:
        overrides["dataset"] = dataset
    if flowcharts is not None:
        overrides["flowchart_dir"] = flowcharts
    if faq is not None:
        overrides["faq_path"] = faq
    if budget_multiplier is not None:
        overrides["budget_multiplier"] = budget_multiplier
    if seed is not None:
        overrides["seed"] = seed
    if parallel is not None:
        overrides["parallelism"] = parallel
    if out is not None:
        overrides["out_dir"] = out
    if config is not None:
        return load_run_config(config, **overrides)
    if "dataset" not in overrides or "flowchart_dir" not in overrides:
        raise click.UsageError("need --config, or both --dataset and --flowcharts")
    return RunConfig(**overrides)


@main.command()
@click.option("--config", type=click.Path(exists=True, path_type=Path))
@click.option("--dataset", type=click.Path(exists=True, path_type=Path))
@click.option("--flowcharts", type=click.Path(exists=True, path_type=Path))
@click.option("--faq", type=click.Path(exists=True, path_type=Path))
@click.option("--budget-multiplier", type=float)
@click.option("--seed", type=int)
@click.option("--parallel", type=int)
@click.option("--out", type=click.Path(path_type=Path))
def run(config, dataset, flowcharts, faq, budget_multiplier, seed, parallel, out) -> None:
    """Run a full evaluation suite and print the report."""
    cfg = _config_from_flags(config, dataset, flowcharts, faq, budget_multiplier, seed, parallel, out)
    suite = run_suite(cfg)
    click.echo(render_suite_text(cfg, suite), nl=False)
    if cfg.out_dir:
        click.echo(f"artifacts written to {cfg.out_dir}")


@main.command()
@click.argument("logs", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
def replay(logs: tuple[Path, ...]) -> None:
    """Rebuild episode records from transcript logs and print them."""
    for log in logs:
        record = replay_log(log)
        click.echo(
            json.dumps(
                {
                    "sample_id": record.sample_id,
                    "predicted": record.predicted,
                    "gt": record.gt,
                    "turns": record.turns,
                    "budget": record.budget,
                    "transition_lengths": record.transition_lengths,
                    "faq_turns": record.faq_turns,
                },
                sort_keys=True,
            )
        )


@main.command()
@click.argument("transcripts", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--json-out", "json_out", type=click.Path(path_type=Path))
def report(transcripts: tuple[Path, ...], json_out: Path | None) -> None:
    """Aggregate transcript logs into the metrics table."""
    logs: list[Path] = []
    for path in transcripts:
        if path.is_dir():
            logs.extend(sorted(path.glob("*.jsonl")))
        else:
            logs.append(path)
    if not logs:
        raise click.UsageError("no transcript logs found")
    records: list[EpisodeRecord] = [replay_log(log) for log in logs]
    rep = compute_report(records)
    click.echo(render_report_table(rep))
    if json_out is not None:
        json_out.write_text(json.dumps(rep.to_dict(), sort_keys=True, indent=2) + "\n")


@main.command()
@click.option("--flowcharts", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--chart", "chart_id", required=True)
@click.option("--faq", type=click.Path(exists=True, path_type=Path))
@click.option("--binding", "binding_path", type=click.Path(exists=True, path_type=Path))
@click.option("--budget", type=int, default=30, show_default=True)
def chat(flowcharts: Path, chart_id: str, faq: Path | None, binding_path: Path | None, budget: int) -> None:
    """Debug loop: talk to the agent on one flowchart via stdin/stdout."""
    charts = load_flowchart_dir(flowcharts)
    fc: Flowchart | None = charts.get(chart_id)
    if fc is None:
        raise click.UsageError(f"unknown flowchart {chart_id!r}; have {sorted(charts)}")
    binding_cfg = (
        json.loads(binding_path.read_text()) if binding_path else {"kind": "scripted"}
    )
    binding = build_binding(binding_cfg)
    faq_store = ingest_faqs(faq) if faq else None

    first = click.prompt("you")
    state, outcome = start(fc, first, binding, AgentConfig(turn_budget=budget))
    click.echo(f"agent[{outcome.node}]: {outcome.utterance}")
    while state.phase is AgentPhase.ACTIVE:
        try:
            text = click.prompt("you")
        except click.Abort:
            break
        outcome = step(state, text, binding, faq_store)
        click.echo(f"agent[{outcome.node}]: {outcome.utterance}")
    click.echo(f"session ended: {state.phase.value}; path {' -> '.join(state.predicted)}")


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True, path_type=Path))
def serve(config: Path) -> None:
    """Start the HTTP service."""
    from flowdialog.service import load_service_config, serve as serve_app

    serve_app(load_service_config(config))


if __name__ == "__main__":
    main()
