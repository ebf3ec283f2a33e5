"""Service core: per-user pipelines over the engine.

The paper-shaped five-server topology collapses into one process with an
internal queue per user: every envelope (frame, audio, utterance, response
request) for a user is processed by that user's worker thread in sequence
order, while different users run concurrently. All inputs are recorded in
the event log; a restart replays the log and reconstructs identical state.
"""

from __future__ import annotations

import enum
import queue
import secrets
import threading
from concurrent.futures import Future
from concurrent.futures import TimeoutError as futures_timeout
from dataclasses import dataclass, field

from .. import __version__
from ..engine import EngineConfig, TurnTrace, UserEngine
from ..providers import ProviderBundle
from .eventlog import EventLog


class ServiceError(Exception):
    pass


class UnknownUser(ServiceError):
    pass


class Forbidden(ServiceError):
    pass


class QueueFull(ServiceError):
    pass


class PipelineTimeout(ServiceError):
    pass


class EnvelopeKind(enum.Enum):
    FRAME = "Frame"
    AUDIO = "Audio"
    UTTERANCE = "Utterance"
    RESPONSE_REQUEST = "ResponseRequest"


@dataclass
class Envelope:
    user_id: str
    kind: EnvelopeKind
    payload: dict
    enqueued_at: float
    seq: int = 0
    future: Future | None = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        return {"user_id": self.user_id, "envelope_kind": self.kind.value,
                "payload": self.payload, "enqueued_at": self.enqueued_at,
                "seq": self.seq}


@dataclass
class ServiceConfig:
    data_dir: str
    queue_size: int = 1024
    response_timeout_s: float = 30.0
    engine: EngineConfig = field(default_factory=EngineConfig)


@dataclass
class _Job:
    """A callable executed on the user's worker thread (rollover, maintenance)."""

    fn: object
    future: Future


class _UserRuntime:
    def __init__(self, user_id: str, token: str, engine: UserEngine, queue_size: int):
        self.user_id = user_id
        self.token = token
        self.engine = engine
        self.queue: queue.Queue = queue.Queue(maxsize=queue_size)
        self.seq: dict[EnvelopeKind, int] = {k: 0 for k in EnvelopeKind}
        self.subscribers: list[queue.Queue] = []
        self.worker: threading.Thread | None = None
        self.enqueue_lock = threading.Lock()


class CompanionService:
    def __init__(self, config: ServiceConfig, bundle: ProviderBundle):
        self.config = config
        self.bundle = bundle
        self.users: dict[str, _UserRuntime] = {}
        self._users_lock = threading.Lock()
        self.log = EventLog(f"{config.data_dir}/events.jsonl")
        self._replaying = False
        self._stopped = False
        self.replay()

    # -- users -----------------------------------------------------------

    def register_user(self, user_id: str, token: str | None = None) -> str:
        with self._users_lock:
            if user_id in self.users:
                raise ServiceError(f"user {user_id!r} already registered")
            token = token or secrets.token_hex(16)
            engine = UserEngine(user_id, self.bundle, self.config.engine)
            runtime = _UserRuntime(user_id, token, engine, self.config.queue_size)
            self.users[user_id] = runtime
        self._log("user_registered", {"user_id": user_id, "token": token})
        self._start_worker(runtime)
        return token

    def _runtime(self, user_id: str) -> _UserRuntime:
        runtime = self.users.get(user_id)
        if runtime is None:
            raise UnknownUser(f"unknown user {user_id!r}")
        return runtime

    def authorize(self, user_id: str, token: str) -> _UserRuntime:
        runtime = self._runtime(user_id)
        if token != runtime.token:
            raise Forbidden(f"token does not grant access to user {user_id!r}")
        return runtime

    # -- envelope pipeline -------------------------------------------------

    def _start_worker(self, runtime: _UserRuntime) -> None:
        worker = threading.Thread(target=self._worker_loop, args=(runtime,),
                                  name=f"worker-{runtime.user_id}", daemon=True)
        runtime.worker = worker
        worker.start()

    def _worker_loop(self, runtime: _UserRuntime) -> None:
        while True:
            item = runtime.queue.get()
            if item is None:
                return
            if isinstance(item, _Job):
                try:
                    item.future.set_result(item.fn())
                except Exception as exc:
                    item.future.set_exception(exc)
                continue
            try:
                result = self._process(runtime, item)
                if item.future is not None:
                    item.future.set_result(result)
            except Exception as exc:  # surfaced through the future when waited on
                if item.future is not None:
                    item.future.set_exception(exc)

    def _process(self, runtime: _UserRuntime, envelope: Envelope):
        engine = runtime.engine
        payload = envelope.payload
        if envelope.kind is EnvelopeKind.FRAME:
            caption = engine.ingest_frame(payload["timestamp"],
                                          frame=payload.get("frame"),
                                          caption=payload.get("caption"))
            return caption
        if envelope.kind in (EnvelopeKind.UTTERANCE, EnvelopeKind.AUDIO,
                             EnvelopeKind.RESPONSE_REQUEST):
            trace = engine.respond(payload["timestamp"],
                                   utterance=payload.get("text"),
                                   audio=payload.get("audio"))
            self._log("turn_trace", {"user_id": runtime.user_id,
                                     "trace": trace.to_json_dict()})
            self._notify(runtime, "turn", {
                "turn_id": trace.turn_id,
                "text": trace.response,
                "tags": trace.tags,
                "primary_factor": trace.primary_factor,
            })
            return trace
        raise ServiceError(f"unhandled envelope kind {envelope.kind}")

    def enqueue(self, user_id: str, kind: EnvelopeKind, payload: dict,
                enqueued_at: float, wait: bool = False):
        """Queue an envelope in per-user seq order; optionally wait for the result."""
        runtime = self._runtime(user_id)
        with runtime.enqueue_lock:
            runtime.seq[kind] += 1
            envelope = Envelope(user_id, kind, payload, enqueued_at,
                                seq=runtime.seq[kind],
                                future=Future() if wait else None)
            try:
                runtime.queue.put_nowait(envelope)
            except queue.Full as exc:
                raise QueueFull(f"queue for user {user_id!r} is full") from exc
            self._log("envelope", envelope.to_json_dict())
        if not wait:
            return envelope.seq
        try:
            return envelope.future.result(timeout=self.config.response_timeout_s)
        except futures_timeout as exc:
            raise PipelineTimeout(
                f"no response within {self.config.response_timeout_s}s") from exc

    # -- operations ---------------------------------------------------------

    def ingest_frame(self, user_id: str, timestamp: float, frame: str | None = None,
                     caption: str | None = None) -> int:
        return self.enqueue(user_id, EnvelopeKind.FRAME,
                            {"timestamp": timestamp, "frame": frame,
                             "caption": caption}, timestamp)

    def ingest_utterance(self, user_id: str, timestamp: float,
                         text: str | None = None,
                         audio: str | None = None) -> TurnTrace:
        kind = (EnvelopeKind.UTTERANCE if text is not None
                else EnvelopeKind.AUDIO if audio is not None
                else EnvelopeKind.RESPONSE_REQUEST)
        return self.enqueue(user_id, kind,
                            {"timestamp": timestamp, "text": text, "audio": audio},
                            timestamp, wait=True)

    def rollover(self, user_id: str, day: str | None, now: float) -> dict:
        runtime = self._runtime(user_id)
        engine = runtime.engine
        if day is None:
            days = engine.capture_buffer.days()
            day = days[-1] if days else None
        if day is None:
            return {"day": None, "events": 0, "summaries": 0,
                    "distill": {"created": 0, "reinforced": 0,
                                "contradicted": 0, "replaced": 0},
                    "noop": True}
        noop = day in engine.committed_days
        # run on the worker thread so rollover is exclusive with the user's turns;
        # logged only on success so replay never retries a failed commit
        counts, distilled = self._run_on_worker(runtime, lambda: engine.rollover(day, now))
        self._log("rollover", {"user_id": user_id, "day": day, "now": now})
        self._notify(runtime, "rollover", {
            "day": day, "events": counts.events, "summaries": counts.summaries,
            "distill": distilled.to_json_dict(),
        })
        return {"day": day, "events": counts.events, "summaries": counts.summaries,
                "distill": distilled.to_json_dict(), "noop": noop}

    def _run_on_worker(self, runtime: _UserRuntime, fn):
        if self._replaying:
            return fn()  # workers are idle during replay; apply inline
        future: Future = Future()
        runtime.queue.put(_Job(fn, future))
        return future.result(timeout=self.config.response_timeout_s)

    def set_flags(self, user_id: str, **flags) -> dict:
        runtime = self._runtime(user_id)
        clean = {k: v for k, v in flags.items() if v is not None}
        self._log("config_changed", {"user_id": user_id, "flags": clean})
        runtime.engine.set_flags(**clean)
        cfg = runtime.engine.config
        return {"use_profile": cfg.use_profile, "use_history": cfg.use_history,
                "use_realtime": cfg.use_realtime}

    # -- SSE ------------------------------------------------------------------

    def subscribe(self, user_id: str) -> queue.Queue:
        runtime = self._runtime(user_id)
        q: queue.Queue = queue.Queue(maxsize=256)
        runtime.subscribers.append(q)
        return q

    def unsubscribe(self, user_id: str, q: queue.Queue) -> None:
        runtime = self.users.get(user_id)
        if runtime and q in runtime.subscribers:
            runtime.subscribers.remove(q)

    def _notify(self, runtime: _UserRuntime, event: str, data: dict) -> None:
        if self._replaying:
            return
        for q in list(runtime.subscribers):
            try:
                q.put_nowait({"event": event, "data": data})
            except queue.Full:
                pass

    # -- log + replay -----------------------------------------------------------

    def _log(self, kind: str, payload: dict) -> None:
        if not self._replaying:
            self.log.append(kind, payload)

    def replay(self) -> int:
        """Re-apply the event log; returns the number of entries applied."""
        entries = EventLog.read_all(f"{self.config.data_dir}/events.jsonl")
        if not entries:
            return 0
        self._replaying = True
        applied = 0
        try:
            for entry in entries:
                kind = entry["kind"]
                if kind == "user_registered":
                    self.register_user(entry["user_id"], entry["token"])
                elif kind == "envelope":
                    runtime = self._runtime(entry["user_id"])
                    env_kind = EnvelopeKind(entry["envelope_kind"])
                    runtime.seq[env_kind] = max(runtime.seq[env_kind], entry["seq"])
                    envelope = Envelope(entry["user_id"], env_kind,
                                        entry["payload"], entry["enqueued_at"],
                                        seq=entry["seq"])
                    self._process(runtime, envelope)
                elif kind == "rollover":
                    runtime = self._runtime(entry["user_id"])
                    runtime.engine.rollover(entry["day"], entry["now"])
                elif kind == "config_changed":
                    runtime = self._runtime(entry["user_id"])
                    runtime.engine.set_flags(**entry["flags"])
                applied += 1
        finally:
            self._replaying = False
        return applied

    # -- shutdown ------------------------------------------------------------------

    def shutdown(self) -> None:
        if self._stopped:
            return
        self._stopped = True
        for runtime in self.users.values():
            runtime.queue.put(None)
        for runtime in self.users.values():
            if runtime.worker is not None:
                runtime.worker.join(timeout=5)
        import os
        snap_dir = f"{self.config.data_dir}/snapshots"
        os.makedirs(snap_dir, exist_ok=True)
        for user_id, runtime in self.users.items():
            runtime.engine.store.snapshot(f"{snap_dir}/{user_id}.bin")
        self.log.close()

    def health(self) -> dict:
        return {"status": "ok", "version": __version__,
                "provider_mode": self.bundle.mode,
                "users": len(self.users)}
