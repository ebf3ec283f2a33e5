"""Provider interfaces for all external models.

Every model the pipeline touches (embedder, captioner, transcriber and the
two completion roles) sits behind a small interface with two interchangeable
backends: deterministic reference implementations driven by versioned rule
tables, and remote HTTP clients. Reference providers are pure functions of
(inputs, seed), which is what makes the whole pipeline testable offline.
"""

from __future__ import annotations

import enum
import json
import threading
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from .embedding import DEFAULT_DIMS, cosine, embed_text


class TaskTag(enum.Enum):
    """One tag per pipeline completion task; Respond is the only Large-role tag."""

    LOC_ACTIVITY = "LocActivity"
    EVENT_SUMMARY = "EventSummary"
    SESSION_SUMMARY = "SessionSummary"
    INDEX_KEYS = "IndexKeys"
    IMPORTANCE = "Importance"
    PROFILE_PROPOSAL = "ProfileProposal"
    PROFILE_MERGE = "ProfileMerge"
    PLAN_STRATEGY = "PlanStrategy"
    DECIDE_ACTION = "DecideAction"
    PROPOSE_QUERIES = "ProposeQueries"
    REPORT = "Report"
    RESPOND = "Respond"


class Role(enum.Enum):
    BASE = "base"
    LARGE = "large"


#: Required input fields per task tag; callers may pass empty strings but
#: every key must be present.
REQUIRED_FIELDS: dict[TaskTag, tuple[str, ...]] = {
    TaskTag.LOC_ACTIVITY: ("caption", "utterance"),
    TaskTag.EVENT_SUMMARY: ("members",),
    TaskTag.SESSION_SUMMARY: ("turns",),
    TaskTag.INDEX_KEYS: ("text",),
    TaskTag.IMPORTANCE: ("text",),
    TaskTag.PROFILE_PROPOSAL: ("text",),
    TaskTag.PROFILE_MERGE: ("existing", "proposal"),
    TaskTag.PLAN_STRATEGY: ("utterance", "caption", "window"),
    TaskTag.DECIDE_ACTION: ("plan", "window"),
    TaskTag.PROPOSE_QUERIES: ("utterance", "activity", "directive"),
    TaskTag.REPORT: ("hits", "limit"),
    TaskTag.RESPOND: ("utterance", "caption", "location", "activity",
                      "retrieved", "directive", "window"),
}


def role_for(tag: TaskTag) -> Role:
    return Role.LARGE if tag is TaskTag.RESPOND else Role.BASE


class ProviderError(Exception):
    """Base class for provider failures."""


class UnknownFrame(ProviderError):
    pass


class UnknownAudio(ProviderError):
    pass


class RemoteFailure(ProviderError):
    pass


class MissingField(ProviderError):
    """A completion call lacked a required input field or violated routing config."""


class MalformedReply(ProviderError):
    """A provider reply the downstream parser rejects."""


@dataclass(frozen=True)
class ProviderCall:
    """One entry in the provider call log, for routing audits."""

    tag: TaskTag
    role: Role


class CallLog:
    """Thread-safe append-only record of completion calls."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._calls: list[ProviderCall] = []

    def record(self, tag: TaskTag, role: Role) -> None:
        with self._lock:
            self._calls.append(ProviderCall(tag, role))

    def calls(self) -> list[ProviderCall]:
        with self._lock:
            return list(self._calls)

    def routing_ok(self) -> bool:
        """True iff every Respond call used Large and everything else Base."""
        return all(call.role is role_for(call.tag) for call in self.calls())


def load_packaged_json(name: str) -> dict:
    ref = resources.files("companion.providers").joinpath("data").joinpath(name)
    return json.loads(ref.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ProviderBundle:
    """Immutable set of providers the engine runs against.

    ``embedder`` maps text to a unit-norm vector, ``captioner`` and
    ``transcriber`` resolve opaque frame/audio references to text, and
    ``completer`` executes a tagged completion task. The bundle enforces
    the role split (Respond -> Large, everything else -> Base) and records
    each completion in ``call_log``.
    """

    embedder: Callable[[str], np.ndarray]
    captioner: Callable[[str], str]
    transcriber: Callable[[str], str]
    completer_base: Callable[[TaskTag, dict, int], str]
    completer_large: Callable[[TaskTag, dict, int], str]
    dims: int = DEFAULT_DIMS
    mode: str = "reference"
    call_log: CallLog = field(default_factory=CallLog)

    def embed(self, text: str) -> np.ndarray:
        return self.embedder(text)

    def caption_frame(self, frame: str) -> str:
        return self.captioner(frame)

    def transcribe(self, audio: str) -> str:
        return self.transcriber(audio)

    def complete(self, tag: TaskTag, inputs: dict, seed: int = 0,
                 role: Role | None = None) -> str:
        expected_role = role_for(tag)
        if role is not None and role is not expected_role:
            raise MissingField(
                f"tag {tag.value} must be routed to the {expected_role.value} role"
            )
        missing = [f for f in REQUIRED_FIELDS[tag] if f not in inputs]
        if missing:
            raise MissingField(f"{tag.value} call missing fields: {missing}")
        self.call_log.record(tag, expected_role)
        completer = (self.completer_large if expected_role is Role.LARGE
                     else self.completer_base)
        return completer(tag, inputs, seed)


def reference_bundle(fixtures: dict | None = None, dims: int = DEFAULT_DIMS) -> ProviderBundle:
    """Build the all-reference bundle (the default for tests, CLI and sims)."""
    from .reference import FixtureCaptioner, FixtureTranscriber, ReferenceCompleter

    data = fixtures if fixtures is not None else load_packaged_json("fixtures.json")
    completer = ReferenceCompleter()
    return ProviderBundle(
        embedder=lambda text: embed_text(text, dims),
        captioner=FixtureCaptioner(data.get("frames", {})),
        transcriber=FixtureTranscriber(data.get("audio", {})),
        completer_base=completer,
        completer_large=completer,
        dims=dims,
        mode="reference",
    )


__all__ = [
    "TaskTag",
    "Role",
    "REQUIRED_FIELDS",
    "role_for",
    "ProviderError",
    "UnknownFrame",
    "UnknownAudio",
    "RemoteFailure",
    "MissingField",
    "MalformedReply",
    "ProviderCall",
    "CallLog",
    "ProviderBundle",
    "reference_bundle",
    "load_packaged_json",
    "embed_text",
    "cosine",
    "DEFAULT_DIMS",
]
