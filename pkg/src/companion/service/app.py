"""HTTP JSON API over the service core.

Single-tenant bearer tokens: registering a user returns a token that only
grants access to that user's data. The CLI and the web UI consume this API
exclusively; the SSE stream at /events/{user_id} is the sole push channel.
"""

from __future__ import annotations

import json
import queue
import time

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from ..providers import UnknownAudio, UnknownFrame
from ..vecstore import Collection
from .core import (
    CompanionService,
    Forbidden,
    PipelineTimeout,
    QueueFull,
    ServiceError,
    UnknownUser,
)


class RegisterBody(BaseModel):
    user_id: str


class FrameBody(BaseModel):
    user_id: str
    frame: str | None = None
    caption: str | None = None
    timestamp: float | None = None


class UtteranceBody(BaseModel):
    user_id: str
    text: str | None = None
    audio: str | None = None
    timestamp: float | None = None


class RolloverBody(BaseModel):
    user_id: str
    day: str | None = None
    now: float | None = None


class ConfigBody(BaseModel):
    user_id: str
    use_profile: bool | None = None
    use_history: bool | None = None
    use_realtime: bool | None = None


def create_app(service: CompanionService) -> FastAPI:
    app = FastAPI(title="companion", version=service.health()["version"])
    app.state.service = service

    def bearer(request: Request) -> str:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return header[7:]
        return request.query_params.get("token", "")

    def authorized(user_id: str, request: Request):
        try:
            return service.authorize(user_id, bearer(request))
        except UnknownUser as exc:
            raise HTTPException(404, str(exc)) from exc
        except Forbidden as exc:
            raise HTTPException(403, str(exc)) from exc

    @app.exception_handler(ServiceError)
    async def service_error_handler(request, exc: ServiceError):
        raise HTTPException(500, str(exc))

    @app.get("/health")
    def health():
        return service.health()

    @app.post("/users", status_code=201)
    def register(body: RegisterBody):
        try:
            token = service.register_user(body.user_id)
        except ServiceError as exc:
            raise HTTPException(409, str(exc)) from exc
        return {"user_id": body.user_id, "token": token}

    @app.post("/frames", status_code=202)
    def ingest_frame(body: FrameBody, request: Request):
        authorized(body.user_id, request)
        ts = body.timestamp if body.timestamp is not None else time.time()
        try:
            seq = service.ingest_frame(body.user_id, ts, frame=body.frame,
                                       caption=body.caption)
        except QueueFull as exc:
            raise HTTPException(429, str(exc)) from exc
        return {"seq": seq}

    @app.post("/utterances")
    def ingest_utterance(body: UtteranceBody, request: Request):
        authorized(body.user_id, request)
        ts = body.timestamp if body.timestamp is not None else time.time()
        try:
            trace = service.ingest_utterance(body.user_id, ts, text=body.text,
                                             audio=body.audio)
        except QueueFull as exc:
            raise HTTPException(429, str(exc)) from exc
        except PipelineTimeout as exc:
            raise HTTPException(504, str(exc)) from exc
        except (UnknownFrame, UnknownAudio) as exc:
            raise HTTPException(400, str(exc)) from exc
        return {
            "turn_id": trace.turn_id,
            "text": trace.response,
            "tags": trace.tags,
            "primary_factor": trace.primary_factor,
        }

    @app.post("/rollover")
    def rollover(body: RolloverBody, request: Request):
        authorized(body.user_id, request)
        now = body.now if body.now is not None else time.time()
        return service.rollover(body.user_id, body.day, now)

    @app.post("/config")
    def set_config(body: ConfigBody, request: Request):
        authorized(body.user_id, request)
        return service.set_flags(body.user_id, use_profile=body.use_profile,
                                 use_history=body.use_history,
                                 use_realtime=body.use_realtime)

    @app.get("/history")
    def get_history(user_id: str, request: Request, start: float | None = None,
                    end: float | None = None):
        runtime = authorized(user_id, request)
        turns = [
            t.to_json_dict() for t in runtime.engine.dialogue
            if (start is None or t.timestamp >= start)
            and (end is None or t.timestamp <= end)
        ]
        return {"user_id": user_id, "turns": turns}

    @app.get("/profiles")
    def get_profiles(user_id: str, request: Request):
        runtime = authorized(user_id, request)
        return {"user_id": user_id,
                "profiles": [p.to_json_dict() for p in runtime.engine.profiles()]}

    @app.get("/memory")
    def get_memory(user_id: str, request: Request, collection: str = "Events",
                   page: int = 0, page_size: int = 50):
        runtime = authorized(user_id, request)
        try:
            col = Collection(collection)
        except ValueError as exc:
            raise HTTPException(400, f"unknown collection {collection!r}") from exc
        records = runtime.engine.store.records(col)
        total = len(records)
        window = records[page * page_size:(page + 1) * page_size]
        return {
            "user_id": user_id,
            "collection": collection,
            "page": page,
            "total": total,
            "records": [r.to_json_dict(include_embedding=False) for r in window],
        }

    @app.get("/export")
    def export_store(user_id: str, request: Request):
        runtime = authorized(user_id, request)
        from fastapi.responses import PlainTextResponse
        return PlainTextResponse(runtime.engine.store.export_jsonl(),
                                 media_type="application/jsonl")

    @app.get("/trace/{turn_id}")
    def get_trace(turn_id: str, request: Request):
        user_id = turn_id.rsplit("-t", 1)[0]
        runtime = authorized(user_id, request)
        trace = runtime.engine.get_trace(turn_id)
        if trace is None:
            raise HTTPException(404, f"no trace for turn {turn_id!r}")
        return trace.to_json_dict()

    @app.get("/events/{user_id}")
    def events(user_id: str, request: Request):
        authorized(user_id, request)
        subscription = service.subscribe(user_id)

        def stream():
            try:
                while True:
                    try:
                        item = subscription.get(timeout=15.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    data = json.dumps(item["data"], sort_keys=True)
                    yield f"event: {item['event']}\ndata: {data}\n\n"
            finally:
                service.unsubscribe(user_id, subscription)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
