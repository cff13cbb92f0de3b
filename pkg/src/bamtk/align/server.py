"""HTTP facade over alignment sessions.

Session-scoped JSON API with optimistic concurrency: every mutation body
carries the version the client saw; a mismatch returns 409 and the client
refreshes. Journals live under the server's session directory so a
restarted server can restore any session on demand.
"""

from __future__ import annotations

import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from ..languages import LanguageTag, UnknownLanguageError
from .core import (
    AlignmentError,
    AlignmentSession,
    Direction,
    StaleVersionError,
    UnitKind,
    export_tsv,
)


class CreateSessionRequest(BaseModel):
    streams: dict[str, list[str]] | None = None
    stream_files: dict[str, str] | None = None
    output_path: str | None = None


class AdvanceRequest(BaseModel):
    version: int
    language: str = Field(description="bam, fr, en, or all")
    direction: str = Field(description="next or prev")


class AlignRequest(BaseModel):
    version: int
    kind: str


class SaveRequest(BaseModel):
    version: int
    path: str | None = None
    overwrite: bool = False


class ContinueSaveRequest(BaseModel):
    version: int


def create_app(sessions_dir: str | Path) -> FastAPI:
    sessions_dir = Path(sessions_dir)
    sessions_dir.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="alignment service")
    sessions: dict[str, AlignmentSession] = {}

    def get_session(session_id: str) -> AlignmentSession:
        session = sessions.get(session_id)
        if session is None:
            journal = sessions_dir / f"{session_id}.journal"
            if journal.exists():
                session = AlignmentSession.restore(session_id, journal)
                sessions[session_id] = session
            else:
                raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/sessions")
    def create_session(body: CreateSessionRequest) -> dict:
        raw: dict[str, list[str]] = {}
        if body.streams:
            raw.update(body.streams)
        if body.stream_files:
            for code, path in body.stream_files.items():
                try:
                    text = Path(path).read_text(encoding="utf-8")
                except OSError as exc:
                    raise HTTPException(status_code=400, detail=str(exc))
                raw[code] = [line for line in text.splitlines() if line.strip()]
        try:
            streams = {LanguageTag.parse(code): lines for code, lines in raw.items()}
        except UnknownLanguageError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        session_id = uuid.uuid4().hex[:12]
        session = AlignmentSession.create(
            session_id,
            streams,
            journal_path=sessions_dir / f"{session_id}.journal",
            output_path=body.output_path,
        )
        sessions[session_id] = session
        state = session.state()
        state["window"] = session.window()
        return state

    @app.get("/sessions/{session_id}")
    def read_session(session_id: str, radius: int = 2) -> dict:
        session = get_session(session_id)
        state = session.state()
        state["window"] = session.window(radius=radius)
        return state

    def mutate(session: AlignmentSession, version: int, action) -> dict:
        with session.lock:
            try:
                session.check_version(version)
                action()
            except StaleVersionError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except AlignmentError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            state = session.state()
            state["window"] = session.window()
            return state

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str, body: AdvanceRequest) -> dict:
        session = get_session(session_id)
        code = body.language.lower()
        if code == "all":
            language = None
        else:
            try:
                language = LanguageTag.parse(code)
            except UnknownLanguageError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        try:
            direction = Direction(body.direction)
        except ValueError:
            raise HTTPException(status_code=400, detail=f"bad direction {body.direction!r}")
        return mutate(session, body.version, lambda: session.advance(language, direction))

    @app.post("/sessions/{session_id}/align")
    def align(session_id: str, body: AlignRequest) -> dict:
        session = get_session(session_id)
        try:
            kind = UnitKind(body.kind.upper())
        except ValueError:
            raise HTTPException(status_code=400, detail=f"bad kind {body.kind!r}")
        return mutate(session, body.version, lambda: session.mark_aligned(kind))

    @app.post("/sessions/{session_id}/save")
    def save(session_id: str, body: SaveRequest) -> dict:
        session = get_session(session_id)
        return mutate(
            session,
            body.version,
            lambda: session.save(path=body.path, overwrite=body.overwrite),
        )

    @app.post("/sessions/{session_id}/continue-save")
    def continue_save(session_id: str, body: ContinueSaveRequest) -> dict:
        session = get_session(session_id)
        return mutate(session, body.version, lambda: session.continue_save())

    @app.get("/sessions/{session_id}/export", response_class=PlainTextResponse)
    def export(session_id: str) -> str:
        session = get_session(session_id)
        return export_tsv(session.aligned)

    return app
