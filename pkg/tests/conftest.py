from __future__ import annotations

import pytest

from flowdialog.faq import FaqEntry, FaqStore
from flowdialog.graph import Edge, Flowchart, Node

# verdict lines collected by the acceptance tests, echoed after the run
acceptance_verdicts: list[str] = []


def pytest_terminal_summary(terminalreporter) -> None:
    if not acceptance_verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_verdicts:
        terminalreporter.write_line(line)


def build_car_flowchart() -> Flowchart:
    """Eight-node electrical troubleshooting chart used across the suite."""
    nodes = [
        Node("n_open", "open circuit on run?"),
        Node("n_fuse", "fuse wire blown?"),
        Node("n_battery", "check the battery terminals"),
        Node("n_replace", "replace the fuse wire"),
        Node("n_wiring", "inspect the wiring for damage"),
        Node("t_fixed", "problem solved, the circuit is restored"),
        Node("t_wiring", "wiring repaired and tested"),
        Node("t_battery", "battery terminals cleaned and tightened"),
    ]
    edges = [
        Edge("n_open", "n_fuse", "yes"),
        Edge("n_open", "n_battery", "no"),
        Edge("n_fuse", "n_replace", "yes"),
        Edge("n_fuse", "n_wiring", "no"),
        Edge("n_replace", "t_fixed", "done"),
        Edge("n_wiring", "t_wiring", "done"),
        Edge("n_battery", "t_battery", "done"),
    ]
    return Flowchart("car", nodes, edges, "n_open")


def build_cyclic_flowchart() -> Flowchart:
    nodes = [
        Node("c_start", "power cycle the device"),
        Node("c_check", "did the device boot?"),
        Node("c_retry", "hold the reset button"),
        Node("c_done", "setup complete"),
    ]
    edges = [
        Edge("c_start", "c_check", "done"),
        Edge("c_check", "c_done", "yes"),
        Edge("c_check", "c_retry", "no"),
        Edge("c_retry", "c_check", "done"),
    ]
    return Flowchart("bootloop", nodes, edges, "c_start")


def build_diamond_flowchart() -> Flowchart:
    nodes = [
        Node("d_root", "is the light on?"),
        Node("d_a", "flip switch a"),
        Node("d_b", "flip switch b"),
        Node("d_mid", "test the light again"),
        Node("d_end", "lighting works"),
    ]
    edges = [
        Edge("d_root", "d_a", "yes"),
        Edge("d_root", "d_b", "no"),
        Edge("d_a", "d_mid", "done"),
        Edge("d_b", "d_mid", "done"),
        Edge("d_mid", "d_end", "done"),
    ]
    return Flowchart("diamond", nodes, edges, "d_root")


def build_faq_store() -> FaqStore:
    store = FaqStore()
    store.add(
        FaqEntry(
            "How do I check if my car has a short circuit?",
            "Use a multimeter in continuity mode across the suspect circuit with "
            "the load disconnected; a near-zero reading means a short.",
            domain="vehicle",
        )
    )
    store.add(
        FaqEntry(
            "What fuse rating should I buy?",
            "Match the amperage printed on the blown fuse or listed in the owner "
            "manual; never fit a higher rating.",
            domain="vehicle",
        )
    )
    store.add(
        FaqEntry(
            "Why does my router keep rebooting?",
            "Overheating and failing power adapters are the usual causes; try a "
            "known-good adapter first.",
            domain="network",
        )
    )
    return store


@pytest.fixture
def car_fc() -> Flowchart:
    return build_car_flowchart()


@pytest.fixture
def cyclic_fc() -> Flowchart:
    return build_cyclic_flowchart()


@pytest.fixture
def diamond_fc() -> Flowchart:
    return build_diamond_flowchart()


@pytest.fixture
def faq_store() -> FaqStore:
    return build_faq_store()
