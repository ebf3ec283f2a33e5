"""Historical context extraction.

Turns a day's real-time contexts into clustered daily events and the day's
dialogue turns into per-session conversation summaries, then attaches
multi-dimensional index keys and an emotional-arousal importance score and
commits everything to the user's vector store.

Clustering is a greedy left-to-right scan over location+activity embeddings:
a tick joins the open cluster only while its cosine with *every* member
stays at or above the threshold, so clusters are maximal contiguous
all-pairs-similar runs. Sessions split exactly where the gap between
consecutive turns strictly exceeds the interval threshold.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .capture import RealTimeContext
from .providers import ProviderBundle, TaskTag
from .providers.embedding import cosine
from .vecstore import Collection, MemoryRecord, VectorStore, deterministic_ulid

DEFAULT_CLUSTER_THRESHOLD = 0.80
DEFAULT_SESSION_GAP_S = 10 * 60.0
_TS_FMT = "%Y-%m-%d %H:%M:%S"


class Speaker(enum.Enum):
    USER = "User"
    SYSTEM = "System"


@dataclass
class DialogueTurn:
    speaker: Speaker
    text: str
    timestamp: float

    def to_json_dict(self) -> dict:
        return {"speaker": self.speaker.value, "text": self.text,
                "timestamp": self.timestamp}


@dataclass
class Session:
    turns: list[DialogueTurn]

    @property
    def start(self) -> float:
        return self.turns[0].timestamp

    @property
    def end(self) -> float:
        return self.turns[-1].timestamp


@dataclass
class ConversationSummary:
    session: Session
    topics_and_details: str


@dataclass
class DailyEvent:
    start: float
    end: float
    location: str
    activity: str
    summary: str
    member_ticks: list[int]

    def triplet(self) -> str:
        return (f"<{_fmt(self.start)} - {_fmt(self.end)}, "
                f"at the {self.location}, {self.activity}>")


def _fmt(timestamp: float) -> str:
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).strftime(_TS_FMT)


def cluster_events(contexts: list[RealTimeContext], bundle: ProviderBundle,
                   threshold: float = DEFAULT_CLUSTER_THRESHOLD) -> list[list[RealTimeContext]]:
    """Greedy all-pairs clustering of contiguous similar ticks; partitions the input."""
    clusters: list[list[RealTimeContext]] = []
    current: list[RealTimeContext] = []
    current_embs: list = []
    for ctx in contexts:
        emb = bundle.embed(f"{ctx.location} {ctx.activity}")
        if current and all(cosine(emb, member) >= threshold for member in current_embs):
            current.append(ctx)
            current_embs.append(emb)
        elif not current:
            current = [ctx]
            current_embs = [emb]
        else:
            clusters.append(current)
            current = [ctx]
            current_embs = [emb]
    if current:
        clusters.append(current)
    return clusters


def summarize_event(cluster: list[RealTimeContext], bundle: ProviderBundle) -> DailyEvent:
    """Summarize one cluster into a daily event with modal location/activity."""
    if not cluster:
        raise ValueError("cannot summarize an empty cluster")
    members = "\n".join(
        f"{_fmt(ctx.timestamp)}|{ctx.location}|{ctx.activity}" for ctx in cluster
    )
    summary = bundle.complete(TaskTag.EVENT_SUMMARY, {"members": members})
    location = _modal([ctx.location for ctx in cluster])
    activity = _modal([ctx.activity for ctx in cluster])
    return DailyEvent(
        start=cluster[0].timestamp,
        end=cluster[-1].timestamp,
        location=location,
        activity=activity,
        summary=summary,
        member_ticks=[ctx.tick for ctx in cluster],
    )


def _modal(values: list[str]) -> str:
    counts: dict[str, int] = {}
    for value in values:
        counts[value] = counts.get(value, 0) + 1
    best = max(counts.values())
    for value in values:
        if counts[value] == best:
            return value
    raise AssertionError("unreachable for nonempty input")


def segment_sessions(turns: list[DialogueTurn],
                     gap_s: float = DEFAULT_SESSION_GAP_S) -> list[Session]:
    """Split exactly where the inter-turn gap strictly exceeds the threshold."""
    sessions: list[Session] = []
    current: list[DialogueTurn] = []
    for turn in turns:
        if current and turn.timestamp - current[-1].timestamp > gap_s:
            sessions.append(Session(current))
            current = [turn]
        else:
            current.append(turn)
    if current:
        sessions.append(Session(current))
    return sessions


def summarize_session(session: Session, bundle: ProviderBundle) -> ConversationSummary:
    lines = "\n".join(f"{t.speaker.value}|{t.text}" for t in session.turns)
    summary = bundle.complete(TaskTag.SESSION_SUMMARY, {"turns": lines})
    return ConversationSummary(session=session, topics_and_details=summary)


def index_keys(bundle: ProviderBundle, text: str, *, location: str = "",
               start: str = "") -> list[str]:
    reply = bundle.complete(TaskTag.INDEX_KEYS,
                            {"text": text, "location": location, "start": start})
    keys = [k.strip() for k in reply.split(";") if k.strip()]
    deduped: list[str] = []
    for key in keys:
        if key not in deduped:
            deduped.append(key)
    return deduped[:4]


def importance_score(bundle: ProviderBundle, text: str) -> int:
    """1-10 arousal-driven importance; unparsable replies default to 5."""
    reply = bundle.complete(TaskTag.IMPORTANCE, {"text": text})
    try:
        value = int(reply.strip())
    except ValueError:
        return 5
    return max(1, min(10, value))


@dataclass(frozen=True)
class CommitCounts:
    events: int
    summaries: int
    record_ids: tuple = field(default=(), compare=False)


def commit_day(store: VectorStore, bundle: ProviderBundle, user_id: str, day: str,
               contexts: list[RealTimeContext], turns: list[DialogueTurn],
               cluster_threshold: float = DEFAULT_CLUSTER_THRESHOLD,
               session_gap_s: float = DEFAULT_SESSION_GAP_S) -> CommitCounts:
    """Extract and store one day's historical context, all or nothing.

    Record ids derive from (user, day, collection, ordinal), so re-committing
    the same day rewrites byte-identical records.
    """
    events = [summarize_event(cluster, bundle)
              for cluster in cluster_events(contexts, bundle, cluster_threshold)]
    summaries = [summarize_session(session, bundle)
                 for session in segment_sessions(turns, session_gap_s)]

    records: list[MemoryRecord] = []
    for ordinal, event in enumerate(events):
        keys = index_keys(bundle, event.summary, location=event.location,
                          start=_fmt(event.start))
        importance = importance_score(bundle, event.summary)
        text = event.summary
        records.append(MemoryRecord(
            id=deterministic_ulid(event.end, user_id, day, "event", str(ordinal)),
            collection=Collection.EVENTS,
            text=text,
            embedding=bundle.embed(text + " " + " ".join(keys)),
            index_keys=keys,
            importance=importance,
            created_at=event.end,
            updated_at=event.end,
            user_id=user_id,
            meta={"start": event.start, "end": event.end,
                  "location": event.location, "activity": event.activity,
                  "member_ticks": event.member_ticks, "day": day},
        ))
    for ordinal, conv in enumerate(summaries):
        keys = index_keys(bundle, conv.topics_and_details,
                          start=_fmt(conv.session.start))
        importance = importance_score(bundle, conv.topics_and_details)
        text = conv.topics_and_details
        records.append(MemoryRecord(
            id=deterministic_ulid(conv.session.end, user_id, day, "summary", str(ordinal)),
            collection=Collection.SUMMARIES,
            text=text,
            embedding=bundle.embed(text + " " + " ".join(keys)),
            index_keys=keys,
            importance=importance,
            created_at=conv.session.end,
            updated_at=conv.session.end,
            user_id=user_id,
            meta={"start": conv.session.start, "end": conv.session.end, "day": day},
        ))

    # validate everything before touching the store so a failure commits nothing
    for record in records:
        store._validate(record)
    for record in records:
        store.upsert(record)
    return CommitCounts(events=len(events), summaries=len(summaries),
                        record_ids=tuple(r.id for r in records))
