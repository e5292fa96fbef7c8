"""Session-oriented HTTP API over the dialogue agent.

Sessions are in-memory and expire after 30 minutes of inactivity; the
flowchart registry is immutable once the app is built. Concurrent posts to
one session serialize on a per-session lock, so responses always reflect a
total order of that session's turns. Finished sessions can be persisted as
JSON-lines transcripts for later inspection.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from flowdialog.agent import AgentConfig, AgentPhase, AgentState, start, step
from flowdialog.faq import FaqStore, ingest_faqs
from flowdialog.gateway import GatewayError, ModelBinding, RateLimitError
from flowdialog.graph import Flowchart

SESSION_TTL_SECONDS = 30 * 60
DEFAULT_TURN_BUDGET = 30


@dataclass
class ServiceConfig:
    """Service settings, loadable from JSON with environment overrides."""

    flowchart_dir: Path
    faq_path: Path | None = None
    binding: dict[str, Any] = field(default_factory=lambda: {"kind": "scripted"})
    host: str = "127.0.0.1"
    port: int = 8080
    turn_budget: int = DEFAULT_TURN_BUDGET
    transcript_dir: Path | None = None
    cors_origins: list[str] = field(default_factory=list)


def load_service_config(
    path: Path, env: Mapping[str, str] | None = None
) -> ServiceConfig:
    env = os.environ if env is None else env
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict) or "flowchart_dir" not in doc:
        raise ValueError("service config must be a JSON object with 'flowchart_dir'")
    cfg = ServiceConfig(
        flowchart_dir=Path(doc["flowchart_dir"]),
        faq_path=Path(doc["faq_path"]) if doc.get("faq_path") else None,
        binding=doc.get("binding", {"kind": "scripted"}),
        host=doc.get("host", "127.0.0.1"),
        port=int(doc.get("port", 8080)),
        turn_budget=int(doc.get("turn_budget", DEFAULT_TURN_BUDGET)),
        transcript_dir=Path(doc["transcript_dir"]) if doc.get("transcript_dir") else None,
        cors_origins=list(doc.get("cors_origins", [])),
    )
    if env.get("FLOWDIALOG_HOST"):
        cfg.host = env["FLOWDIALOG_HOST"]
    if env.get("FLOWDIALOG_PORT"):
        cfg.port = int(env["FLOWDIALOG_PORT"])
    return cfg


@dataclass
class Session:
    session_id: str
    flowchart_id: str
    state: AgentState
    created: float
    last_active: float
    lock: threading.Lock = field(default_factory=threading.Lock)


class CreateSessionBody(BaseModel):
    flowchart_id: str
    message: str


class MessageBody(BaseModel):
    message: str


def _kind_name(fc: Flowchart, node_id: str) -> str:
    return fc.kind(node_id).value


def create_app(
    charts: Mapping[str, Flowchart],
    binding: ModelBinding,
    faq_store: FaqStore | None = None,
    turn_budget: int = DEFAULT_TURN_BUDGET,
    session_ttl: float = SESSION_TTL_SECONDS,
    transcript_dir: Path | None = None,
    clock: Callable[[], float] = time.time,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    """Build the API app around an immutable flowchart registry.

    ``clock`` exists so expiry is testable without sleeping.
    ``cors_origins`` opts in browser clients served from other origins;
    left empty, no CORS headers are emitted.
    """
    app = FastAPI(title="flowdialog service")
    if cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        with registry_lock:
            session = sessions.get(session_id)
            if session is not None and clock() - session.last_active > session_ttl:
                del sessions[session_id]
                session = None
        if session is None:
            raise HTTPException(status_code=404, detail="unknown or expired session")
        return session

    def persist(session: Session) -> None:
        if transcript_dir is None:
            return
        directory = Path(transcript_dir)
        directory.mkdir(parents=True, exist_ok=True)
        lines: list[dict[str, Any]] = [
            {
                "kind": "header",
                "schema": 1,
                "session_id": session.session_id,
                "flowchart_id": session.flowchart_id,
                "root": session.state.flowchart.root,
                "budget": session.state.config.turn_budget,
            }
        ]
        for turn, ((user_text, agent_text), (outcome_kind, node)) in enumerate(
            zip(session.state.history, session.state.turn_events), start=1
        ):
            lines.append({"kind": "turn", "turn": turn, "speaker": "user", "text": user_text})
            lines.append(
                {
                    "kind": "turn",
                    "turn": turn,
                    "speaker": "agent",
                    "text": agent_text,
                    "node": node,
                    "outcome": outcome_kind,
                }
            )
        path = directory / f"{session.session_id}.jsonl"
        with path.open("w") as fh:
            for line in lines:
                fh.write(json.dumps(line, sort_keys=True) + "\n")

    @app.get("/flowcharts")
    def list_flowcharts() -> dict:
        return {
            "flowcharts": [
                {"id": fc.id, "root": fc.root, "nodes": len(fc.node_ids)}
                for fc in charts.values()
            ]
        }

    @app.get("/flowcharts/{flowchart_id}/graph")
    def flowchart_graph(flowchart_id: str) -> dict:
        fc = charts.get(flowchart_id)
        if fc is None:
            raise HTTPException(status_code=404, detail="unknown flowchart")
        return {
            "id": fc.id,
            "root": fc.root,
            "nodes": [
                {"id": node.id, "text": node.text, "kind": _kind_name(fc, node.id)}
                for node in fc.nodes
            ],
            "edges": [
                {"src": edge.src, "dst": edge.dst, "cond": edge.cond} for edge in fc.edges
            ],
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        fc = charts.get(body.flowchart_id)
        if fc is None:
            raise HTTPException(status_code=404, detail="unknown flowchart")
        if not body.message.strip():
            raise HTTPException(status_code=422, detail="message must be non-empty")
        try:
            state, outcome = start(
                fc, body.message, binding, AgentConfig(turn_budget=turn_budget)
            )
        except RateLimitError as err:
            raise HTTPException(status_code=503, detail=str(err))
        except GatewayError as err:
            raise HTTPException(status_code=502, detail=str(err))
        now = clock()
        session = Session(secrets.token_urlsafe(16), fc.id, state, now, now)
        with registry_lock:
            sessions[session.session_id] = session
        if state.phase is not AgentPhase.ACTIVE:
            persist(session)
        return {
            "session_id": session.session_id,
            "reply": outcome.utterance,
            "node": outcome.node,
            "outcome": outcome.kind,
            "phase": state.phase.value,
            "hops": outcome.hops,
        }

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody) -> dict:
        session = get_session(session_id)
        if not body.message.strip():
            raise HTTPException(status_code=422, detail="message must be non-empty")
        with session.lock:
            if session.state.phase is not AgentPhase.ACTIVE:
                raise HTTPException(
                    status_code=409,
                    detail=f"session is {session.state.phase.value}",
                )
            try:
                outcome = step(session.state, body.message, binding, faq_store)
            except RateLimitError as err:
                raise HTTPException(status_code=503, detail=str(err))
            except GatewayError as err:
                raise HTTPException(status_code=502, detail=str(err))
            session.last_active = clock()
            if session.state.phase is not AgentPhase.ACTIVE:
                persist(session)
            return {
                "reply": outcome.utterance,
                "node": outcome.node,
                "outcome": outcome.kind,
                "phase": session.state.phase.value,
                "path": list(session.state.predicted),
            }

    @app.get("/sessions/{session_id}")
    def session_view(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            thread = []
            for (user_text, agent_text) in session.state.history:
                thread.append({"speaker": "user", "text": user_text})
                thread.append({"speaker": "agent", "text": agent_text})
            return {
                "session_id": session.session_id,
                "flowchart_id": session.flowchart_id,
                "node": session.state.current,
                "phase": session.state.phase.value,
                "path": list(session.state.predicted),
                "turn": session.state.turn,
                "thread": thread,
            }

    return app


def serve(cfg: ServiceConfig) -> None:
    """Build the app from config and block serving it (uvicorn)."""
    import uvicorn

    from flowdialog.datasets import load_flowchart_dir
    from flowdialog.harness import build_binding

    charts = load_flowchart_dir(cfg.flowchart_dir)
    faq_store = ingest_faqs(cfg.faq_path) if cfg.faq_path else None
    app = create_app(
        charts,
        build_binding(cfg.binding),
        faq_store=faq_store,
        turn_budget=cfg.turn_budget,
        transcript_dir=cfg.transcript_dir,
        cors_origins=cfg.cors_origins,
    )
    uvicorn.run(app, host=cfg.host, port=cfg.port)
