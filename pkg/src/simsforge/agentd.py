"""HTTP service: forge characters, chat with them, review QC, run evals.

Sessions are append-only JSONL logs on disk; in-memory state is a replay
of the log, so a restarted service serves identical transcripts.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from . import dataset, dialogue, interview
from .catalog import AspectCatalog, CharacterSpec, validate_spec
from .errors import (
    FileMissing,
    InvalidSpec,
    ParseError,
    ProviderError,
    SessionBusy,
    SimsForgeError,
    UnknownCharacter,
    UnknownSession,
)
from .persona import forge_character
from .provider.base import ChatRequest, Provider
from .store import Workspace

DEFAULT_STATUS = {
    "location": "",
    "status": "",
    "emotion": "Fine",
    "topic": "small talk",
}

STREAM_CHUNK_CHARS = 48


def _http_status(exc: SimsForgeError) -> int:
    if isinstance(exc, (UnknownCharacter, UnknownSession, FileMissing)):
        return 404
    if isinstance(exc, SessionBusy):
        return 409
    if isinstance(exc, ProviderError):
        return 502
    return 400


# ---------------------------------------------------------------------------
# request bodies

class ForgeBody(BaseModel):
    career: str
    aspiration: str
    traits: list[str]
    skills: list[str]


class SessionBody(BaseModel):
    character_id: str
    location: str | None = None
    status: str | None = None
    emotion: str | None = None
    topic: str | None = None


class MessageBody(BaseModel):
    text: str = Field(min_length=1)
    stream: bool = False


class StatusBody(BaseModel):
    location: str | None = None
    status: str | None = None
    emotion: str | None = None
    topic: str | None = None


class VerdictBody(BaseModel):
    script_ref: str
    emotion_ok: bool
    topic_ok: bool
    reviewer: str = ""
    note: str = ""


class QcSampleBody(BaseModel):
    rho: float = dialogue.DEFAULT_QC_RHO
    seed: int = 0


class EvaluationBody(BaseModel):
    character_id: str
    model_label: str = "agent"
    n_questions: int = Field(default=5, ge=1)


# ---------------------------------------------------------------------------
# session state

class ChatSession:
    def __init__(self, session_id: str, character_id: str, status: dict):
        self.id = session_id
        self.character_id = character_id
        self.status = dict(status)
        self.history: list[dict] = []  # {"who": "user"|"agent", "text": str}
        self.lock = threading.Lock()

    def transcript(self) -> dict:
        return {
            "session_id": self.id,
            "character_id": self.character_id,
            "status": dict(self.status),
            "history": [dict(h) for h in self.history],
        }

    @classmethod
    def replay(cls, session_id: str, events: list[dict]) -> "ChatSession":
        if not events or events[0].get("type") != "created":
            raise UnknownSession(session_id)
        head = events[0]
        session = cls(session_id, head["character_id"], head["status"])
        for event in events[1:]:
            kind = event.get("type")
            if kind == "user":
                session.history.append({"who": "user", "text": event["text"]})
            elif kind == "agent":
                session.history.append({"who": "agent", "text": event["text"]})
            elif kind == "status":
                session.status = dict(event["status"])
        return session


def render_history(
    history: list[dict],
    new_text: str,
    agent_name: str,
    system_text: str,
    budget: int = dataset.DEFAULT_TOKEN_BUDGET,
    counter=dataset.default_token_count,
) -> str:
    """Render prior turns plus the new user line, trimmed oldest-first to
    keep system + history within the context budget."""
    lines = [
        f"User: {h['text']}" if h["who"] == "user" else f"{agent_name}: {h['text']}"
        for h in history
    ]
    lines.append(f"User: {new_text}")
    while len(lines) > 1 and counter(system_text) + counter("\n".join(lines)) > budget:
        lines = lines[2:] if len(lines) > 2 else lines[1:]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# app factory

def create_app(
    workspace: Workspace,
    provider: Provider,
    catalog: AspectCatalog,
    ui_dir: str | Path | None = None,
    busy_reject: bool = True,
    token_budget: int = dataset.DEFAULT_TOKEN_BUDGET,
) -> FastAPI:
    app = FastAPI(title="simsforge agent service")
    sessions: dict[str, ChatSession] = {}
    sessions_lock = threading.Lock()
    qc_lock = threading.Lock()

    @app.exception_handler(SimsForgeError)
    async def _on_error(_: Request, exc: SimsForgeError):
        return JSONResponse(
            status_code=_http_status(exc),
            content={"code": type(exc).__name__, "message": str(exc)},
        )

    def check_status_labels(status: dict) -> dict:
        out = dict(status)
        out["emotion"] = catalog.canonical("emotions", status["emotion"])
        out["topic"] = catalog.canonical("topics", status["topic"])
        return out

    def get_session(session_id: str) -> ChatSession:
        with sessions_lock:
            session = sessions.get(session_id)
            if session is None:
                events = workspace.load_session_events(session_id)
                if not events:
                    raise UnknownSession(session_id)
                session = ChatSession.replay(session_id, events)
                sessions[session_id] = session
            return session

    # -- catalog & characters -------------------------------------------------

    @app.get("/catalog")
    def get_catalog():
        return catalog.to_dict()

    @app.get("/characters")
    def list_characters():
        return [r.to_dict() for r in workspace.list_characters()]

    @app.get("/characters/{character_id}")
    def get_character(character_id: str):
        return workspace.load_character(character_id).to_dict()

    @app.post("/characters", status_code=201)
    def forge(body: ForgeBody):
        spec = CharacterSpec(
            career=body.career,
            aspiration=body.aspiration,
            traits=tuple(body.traits),
            skills=tuple(body.skills),
        )
        violations = validate_spec(catalog, spec)
        if violations:
            raise InvalidSpec(violations)
        record = forge_character(spec, provider, catalog)
        record.id = workspace.free_character_id(record.id)
        workspace.save_character(record)
        return record.to_dict()

    # -- sessions -------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionBody):
        workspace.load_character(body.character_id)  # 404 if unknown
        status = dict(DEFAULT_STATUS)
        for key in ("location", "status", "emotion", "topic"):
            value = getattr(body, key)
            if value is not None:
                status[key] = value
        status = check_status_labels(status)
        session = ChatSession(uuid.uuid4().hex[:12], body.character_id, status)
        with sessions_lock:
            sessions[session.id] = session
        workspace.append_session_event(session.id, {
            "type": "created",
            "character_id": session.character_id,
            "status": dict(session.status),
        })
        return session.transcript()

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        session = get_session(session_id)
        acquired = session.lock.acquire(blocking=not busy_reject)
        if not acquired:
            raise SessionBusy(session_id)
        try:
            record = workspace.load_character(session.character_id)
            system_text = dataset.compose_system_text(
                summary=record.summary,
                name=record.profile.name,
                location=session.status["location"],
                status=session.status["status"],
                emotion=session.status["emotion"],
                topic=session.status["topic"],
            )
            rendered = render_history(
                session.history, body.text, record.profile.name,
                system_text, budget=token_budget,
            )
            reply = provider.chat(ChatRequest(
                user=rendered, system=system_text, tag="dialogue",
            ))
            # durable first, memory second; a provider failure above leaves
            # both untouched
            workspace.append_session_event(session.id, {"type": "user", "text": body.text})
            workspace.append_session_event(session.id, {"type": "agent", "text": reply.text})
            session.history.append({"who": "user", "text": body.text})
            session.history.append({"who": "agent", "text": reply.text})
        finally:
            session.lock.release()

        if body.stream:
            def chunks():
                text = reply.text
                for i in range(0, len(text), STREAM_CHUNK_CHARS):
                    yield text[i:i + STREAM_CHUNK_CHARS]
            return StreamingResponse(chunks(), media_type="text/plain")
        return {"reply": reply.text, "history_length": len(session.history)}

    @app.patch("/sessions/{session_id}/status")
    def patch_status(session_id: str, body: StatusBody):
        session = get_session(session_id)
        proposed = dict(session.status)
        for key in ("location", "status", "emotion", "topic"):
            value = getattr(body, key)
            if value is not None:
                proposed[key] = value
        proposed = check_status_labels(proposed)  # raises before any mutation
        session.status = proposed
        workspace.append_session_event(session.id, {"type": "status", "status": proposed})
        return session.transcript()

    @app.get("/sessions/{session_id}/transcript")
    def get_transcript(session_id: str):
        return get_session(session_id).transcript()

    # -- QC ---------------------------------------------------------------------

    @app.post("/qc/sample")
    def qc_make_sample(body: QcSampleBody):
        with qc_lock:
            scripts = workspace.load_all_scripts()
            sampled = dialogue.qc_sample(scripts, rho=body.rho, seed=body.seed)
            refs = [s.ref for s in sampled]
            workspace.save_qc_sample(refs)
        return {"sampled_refs": refs}

    @app.get("/qc/queue")
    def qc_queue():
        refs = workspace.load_qc_sample()
        items = []
        for ref in refs:
            script = workspace.load_script_by_ref(ref)
            items.append({
                "ref": ref,
                "character_id": script.character_id,
                "scene_index": script.scene_index,
                "emotion": script.emotion,
                "topic": script.topic,
                "background": script.background,
                "turns": [t.to_dict() for t in script.turns],
            })
        return items

    @app.post("/qc/verdicts")
    def qc_verdicts(bodies: list[VerdictBody]):
        verdicts = [
            dialogue.ReviewVerdict(
                script_ref=b.script_ref,
                emotion_ok=b.emotion_ok,
                topic_ok=b.topic_ok,
                reviewer=b.reviewer,
                note=b.note,
            )
            for b in bodies
        ]
        with qc_lock:
            scripts = workspace.load_all_scripts()
            ledger = dialogue.apply_reviews(
                scripts, verdicts, sampled_refs=workspace.load_qc_sample(),
            )
            workspace.save_qc_ledger(ledger)
        return ledger.to_dict()

    @app.get("/qc/ledger")
    def qc_ledger():
        ledger = workspace.load_qc_ledger()
        return ledger.to_dict() if ledger else {
            "sampled_refs": [], "reviewed": 0, "aligned_count": 0,
            "alignment_rate": None, "failed_refs": [],
        }

    # -- evaluations --------------------------------------------------------------

    @app.post("/evaluations", status_code=201)
    def run_evaluation(body: EvaluationBody):
        record = workspace.load_character(body.character_id)
        questions = interview.generate_questions(record, provider, n=body.n_questions)
        system_text = dataset.compose_system_text(
            summary=record.summary,
            name=record.profile.name,
            location=DEFAULT_STATUS["location"],
            status=DEFAULT_STATUS["status"],
            emotion=DEFAULT_STATUS["emotion"],
            topic=DEFAULT_STATUS["topic"],
        )
        scores = []
        for q in questions:
            answer = provider.chat(ChatRequest(
                user=q.text, system=system_text, tag="interview",
            )).text
            for dim in interview.DIMENSIONS:
                try:
                    score = interview.judge_response(dim, record, q.text, answer, provider)
                except ParseError as e:
                    raise ProviderError(f"judge reply unusable: {e}") from None
                scores.append(interview.DimensionScore(
                    dimension=dim, score=score,
                    character_id=record.id, question_index=q.index,
                ))
        report = interview.aggregate(scores, model_label=body.model_label)
        evaluation_id = uuid.uuid4().hex[:12]
        payload = {
            "id": evaluation_id,
            "character_id": record.id,
            "model_label": body.model_label,
            "n_questions": body.n_questions,
            "status": "done",
            "report": report.to_dict(),
            "rounded": report.rounded(),
        }
        workspace.save_evaluation(evaluation_id, payload)
        return payload

    @app.get("/evaluations")
    def list_evaluations():
        return workspace.list_evaluations()

    @app.get("/evaluations/{evaluation_id}")
    def get_evaluation(evaluation_id: str):
        return workspace.load_evaluation(evaluation_id)

    # -- debugging ----------------------------------------------------------------

    @app.get("/debug/requests")
    def debug_requests(n: int = 20):
        captured = getattr(provider, "requests", None)
        if captured is None:
            return []
        return [
            {"tag": r.tag, "system": r.system, "user": r.user}
            for r in list(captured)[-n:]
        ]

    # -- static UI ------------------------------------------------------------------

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
