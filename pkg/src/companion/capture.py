"""Per-tick real-time context assembly.

Each tick bundles the latest scene caption, the user's utterance (possibly
empty between speech), and the location/activity inferred from both. Ticks
are strictly ordered per user; malformed inference replies degrade to
"unknown" so capture never stalls the conversation loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

from .providers import ProviderBundle, TaskTag

CAPTURE_INTERVAL_S = 10.0
DEFAULT_BUFFER_CAP = 10_000
UNKNOWN = "unknown"


class CaptureError(Exception):
    pass


class ClockRegression(CaptureError):
    pass


class BufferOverflow(CaptureError):
    pass


@dataclass
class RealTimeContext:
    tick: int
    timestamp: float
    caption: str
    utterance: str
    location: str
    activity: str
    user_id: str
    stale_caption: bool = False

    def day(self) -> str:
        return datetime.fromtimestamp(self.timestamp, tz=timezone.utc).strftime("%Y-%m-%d")

    def to_json_dict(self) -> dict:
        return {
            "tick": self.tick,
            "timestamp": self.timestamp,
            "caption": self.caption,
            "utterance": self.utterance,
            "location": self.location,
            "activity": self.activity,
            "user_id": self.user_id,
            "stale_caption": self.stale_caption,
        }


def infer_location_activity(bundle: ProviderBundle, caption: str,
                            utterance: str) -> tuple[str, str]:
    """Infer (location, activity); any malformed reply degrades to unknowns."""
    reply = bundle.complete(TaskTag.LOC_ACTIVITY,
                            {"caption": caption, "utterance": utterance})
    parts = [p.strip() for p in reply.split("|")]
    if len(parts) != 2 or not parts[0] or not parts[1]:
        return UNKNOWN, UNKNOWN
    return parts[0], parts[1]


@dataclass
class CaptureBuffer:
    """Ordered per-user tick buffer, grouped by UTC day for rollover."""

    user_id: str
    cap: int = DEFAULT_BUFFER_CAP
    _by_day: dict[str, list[RealTimeContext]] = field(default_factory=dict)
    _next_tick: int = 0
    _last_timestamp: float = float("-inf")

    def append(self, context: RealTimeContext) -> None:
        if context.timestamp < self._last_timestamp:
            raise ClockRegression(
                f"tick at {context.timestamp} is earlier than {self._last_timestamp}"
            )
        day = context.day()
        bucket = self._by_day.setdefault(day, [])
        if len(bucket) >= self.cap:
            raise BufferOverflow(f"day buffer for {day} is full ({self.cap})")
        bucket.append(context)
        self._last_timestamp = context.timestamp
        self._next_tick = context.tick + 1

    def next_tick(self) -> int:
        return self._next_tick

    def day_contexts(self, day: str) -> list[RealTimeContext]:
        return list(self._by_day.get(day, []))

    def days(self) -> list[str]:
        return sorted(self._by_day)

    def drop_day(self, day: str) -> None:
        self._by_day.pop(day, None)


def build_real_time_context(bundle: ProviderBundle, buffer: CaptureBuffer,
                            timestamp: float, *, frame: str | None = None,
                            caption: str | None = None, audio: str | None = None,
                            transcript: str | None = None,
                            caption_age_s: float = 0.0) -> RealTimeContext:
    """Assemble one tick and append it to the user's day buffer.

    The caption may be given directly (already-resolved latest frame) or via
    a frame reference; likewise the utterance via transcript or audio
    reference. Captions older than one capture interval are flagged stale.
    """
    if caption is None:
        caption = bundle.caption_frame(frame) if frame is not None else ""
    if transcript is None:
        transcript = bundle.transcribe(audio) if audio is not None else ""
    location, activity = infer_location_activity(bundle, caption, transcript)
    context = RealTimeContext(
        tick=buffer.next_tick(),
        timestamp=timestamp,
        caption=caption,
        utterance=transcript,
        location=location or UNKNOWN,
        activity=activity or UNKNOWN,
        user_id=buffer.user_id,
        stale_caption=caption_age_s > CAPTURE_INTERVAL_S,
    )
    buffer.append(context)
    return context
