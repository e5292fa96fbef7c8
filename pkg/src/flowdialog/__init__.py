"""Flowchart-grounded dialogue: graph engine, ingestion, agents, simulation, evaluation."""

from flowdialog.graph import Edge, Flowchart, Node, NodeKind, normalize_condition

__all__ = [
    "Edge",
    "Flowchart",
    "Node",
    "NodeKind",
    "normalize_condition",
]

__version__ = "0.1.0"
