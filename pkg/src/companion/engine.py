"""Per-user conversation engine.

One UserEngine owns a user's capture buffer, dialogue log, vector store and
active strategy plan, and runs the full loop for each utterance: capture the
tick, plan/decide, retrieve and report, generate the response, and record a
complete causal trace. Ablation flags steer which context layers are
retrieved, committed, and rendered into the response prompt.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import agents, memory, profile
from .capture import (
    CAPTURE_INTERVAL_S,
    CaptureBuffer,
    RealTimeContext,
    build_real_time_context,
)
from .memory import CommitCounts, DialogueTurn, Speaker
from .profile import DistillCounts
from .providers import ProviderBundle, TaskTag
from .vecstore import Collection, VectorStore

FACTOR_REAL_TIME = "RealTime"
FACTOR_HISTORICAL = "Historical"
FACTOR_PROFILE = "Profile"
FACTOR_LANGUAGE_MODEL = "LanguageModel"


@dataclass(frozen=True)
class EngineConfig:
    dims: int = 256
    top_k: int = 5
    window_turns: int = 10
    cluster_threshold: float = memory.DEFAULT_CLUSTER_THRESHOLD
    session_gap_s: float = memory.DEFAULT_SESSION_GAP_S
    profile_threshold: float = profile.DEFAULT_SIMILARITY_THRESHOLD
    half_life_s: float = 24 * 3600.0
    use_profile: bool = True
    use_history: bool = True
    use_realtime: bool = True
    seed: int = 0

    def with_flags(self, use_profile: bool | None = None,
                   use_history: bool | None = None,
                   use_realtime: bool | None = None) -> "EngineConfig":
        from dataclasses import replace
        kwargs = {}
        if use_profile is not None:
            kwargs["use_profile"] = use_profile
        if use_history is not None:
            kwargs["use_history"] = use_history
        if use_realtime is not None:
            kwargs["use_realtime"] = use_realtime
        return replace(self, **kwargs)


@dataclass
class TurnTrace:
    """Full causal trace of one response, replayable through the providers."""

    turn_id: str
    user_id: str
    timestamp: float
    stage_ms: dict
    tags: list[str]
    primary_factor: str
    plan: dict
    action: dict
    queries: list[dict]
    hits: list[dict]
    reporter_text: str
    rendered_prompt: str
    respond_inputs: dict
    response: str
    caption: str
    stale_caption: bool
    degraded: bool = False

    def to_json_dict(self) -> dict:
        return {
            "turn_id": self.turn_id,
            "user_id": self.user_id,
            "timestamp": self.timestamp,
            "stage_ms": self.stage_ms,
            "tags": self.tags,
            "primary_factor": self.primary_factor,
            "plan": self.plan,
            "action": self.action,
            "queries": self.queries,
            "hits": self.hits,
            "reporter_text": self.reporter_text,
            "rendered_prompt": self.rendered_prompt,
            "respond_inputs": self.respond_inputs,
            "response": self.response,
            "caption": self.caption,
            "stale_caption": self.stale_caption,
            "degraded": self.degraded,
        }

    def replay(self, bundle: ProviderBundle) -> str:
        """Re-run the Respond completion from the recorded inputs."""
        return bundle.complete(TaskTag.RESPOND, self.respond_inputs)


@dataclass
class _CaptionCache:
    text: str = ""
    timestamp: float = float("-inf")
    count: int = 0


class UserEngine:
    def __init__(self, user_id: str, bundle: ProviderBundle,
                 config: EngineConfig | None = None):
        self.user_id = user_id
        self.bundle = bundle
        self.config = config or EngineConfig()
        self.store = VectorStore(user_id, self.config.dims,
                                 half_life_s=self.config.half_life_s)
        self.capture_buffer = CaptureBuffer(user_id)
        self.dialogue: list[DialogueTurn] = []
        self.plan: agents.StrategyPlan | None = None
        self._plan_turn_start = 0
        self.traces: dict[str, TurnTrace] = {}
        self.trace_order: list[str] = []
        self.committed_days: dict[str, tuple[CommitCounts, DistillCounts]] = {}
        self._caption = _CaptionCache()
        self._turn_seq = 0

    # -- ingestion -----------------------------------------------------

    def ingest_frame(self, timestamp: float, frame: str | None = None,
                     caption: str | None = None) -> str:
        """Cache the latest scene caption (computed from the frame reference)."""
        if caption is None:
            caption = self.bundle.caption_frame(frame) if frame else ""
        self._caption = _CaptionCache(caption, timestamp, self._caption.count + 1)
        return caption

    def set_flags(self, **flags) -> None:
        self.config = self.config.with_flags(**flags)

    # -- the conversation loop ------------------------------------------

    def respond(self, timestamp: float, utterance: str | None = None,
                audio: str | None = None) -> TurnTrace:
        t0 = time.perf_counter()
        if utterance is None:
            utterance = self.bundle.transcribe(audio) if audio else ""
        caption_age = timestamp - self._caption.timestamp
        context = build_real_time_context(
            self.bundle, self.capture_buffer, timestamp,
            caption=self._caption.text, transcript=utterance,
            caption_age_s=caption_age if self._caption.count else 0.0,
        )
        self.dialogue.append(DialogueTurn(Speaker.USER, utterance, timestamp))
        window = self.dialogue[-self.config.window_turns:]
        t1 = time.perf_counter()

        # dialogue strategy agent: plan (or refine), then decide; progress is
        # judged only against turns exchanged under the current plan
        prior = self.plan
        self.plan = agents.plan_strategy(self.bundle, context, window, prior)
        if self.plan is not prior:
            self._plan_turn_start = len(self.dialogue) - 1
        try:
            action, self.plan = agents.decide_action(self.bundle, self.plan,
                                                     self._decide_window())
        except agents.PlanCompleted:
            self.plan = agents.plan_strategy(self.bundle, context, window, None)
            self._plan_turn_start = len(self.dialogue) - 1
            action, self.plan = agents.decide_action(self.bundle, self.plan,
                                                     self._decide_window())
        t2 = time.perf_counter()

        # information retrieval agent: propose, execute, report
        allowed: set[Collection] = set()
        if self.config.use_history:
            allowed |= {Collection.EVENTS, Collection.SUMMARIES}
        if self.config.use_profile:
            allowed |= {Collection.PROFILES}
        queries: list[agents.Query] = []
        hits = []
        reporter_text = ""
        if allowed:
            queries = agents.propose_queries(self.bundle, context, action)
            hits = agents.execute_queries(self.store, queries, self.config.top_k,
                                          timestamp, allowed)
            if hits:
                reporter_text = agents.report(self.bundle, hits, self.config.top_k,
                                              timestamp)
        t3 = time.perf_counter()

        personal = agents.PersonalContext(
            real_time=context, retrieved=hits, retrieved_summary=reporter_text,
            strategy=action, dialogue_window=window,
        )
        response, respond_inputs, prompt, degraded = agents.generate_response(
            self.bundle, personal, self.config.use_realtime)
        self.dialogue.append(DialogueTurn(Speaker.SYSTEM, response, timestamp))
        t4 = time.perf_counter()

        trace = self._build_trace(context, action, queries, hits, reporter_text,
                                  prompt, respond_inputs, response, degraded,
                                  stage_ms={
                                      "capture": (t1 - t0) * 1000.0,
                                      "plan": (t2 - t1) * 1000.0,
                                      "retrieve": (t3 - t2) * 1000.0,
                                      "respond": (t4 - t3) * 1000.0,
                                  })
        self.traces[trace.turn_id] = trace
        self.trace_order.append(trace.turn_id)
        return trace

    def _decide_window(self) -> list[DialogueTurn]:
        start = max(self._plan_turn_start, len(self.dialogue) - self.config.window_turns)
        return self.dialogue[start:]

    def _build_trace(self, context: RealTimeContext, action, queries, hits,
                     reporter_text, prompt, respond_inputs, response, degraded,
                     stage_ms) -> TurnTrace:
        self._turn_seq += 1
        turn_id = f"{self.user_id}-t{self._turn_seq:05d}"
        response_words = set(_content_words(response))
        tags = [FACTOR_LANGUAGE_MODEL]
        profile_used = historical_used = False
        for hit in hits:
            overlap = set(_content_words(hit.record.text)) & response_words
            if not overlap:
                continue
            if hit.record.collection is Collection.PROFILES:
                profile_used = True
            else:
                historical_used = True
        realtime_used = (self.config.use_realtime and context.caption
                         and bool(set(_content_words(context.caption)) & response_words))
        if realtime_used:
            tags.append(FACTOR_REAL_TIME)
        if historical_used:
            tags.append(FACTOR_HISTORICAL)
        if profile_used:
            tags.append(FACTOR_PROFILE)
        if profile_used:
            primary = FACTOR_PROFILE
        elif historical_used:
            primary = FACTOR_HISTORICAL
        elif realtime_used:
            primary = FACTOR_REAL_TIME
        else:
            primary = FACTOR_LANGUAGE_MODEL
        return TurnTrace(
            turn_id=turn_id,
            user_id=self.user_id,
            timestamp=context.timestamp,
            stage_ms=stage_ms,
            tags=tags,
            primary_factor=primary,
            plan=self.plan.to_json_dict(),
            action=action.to_json_dict(),
            queries=[{"aspect": q.aspect, "target": q.target.value} for q in queries],
            hits=[{
                "record_id": h.record.id,
                "collection": h.record.collection.value,
                "text": h.record.text,
                "importance": h.record.importance,
                "s_similarity": h.s_similarity,
                "s_importance": h.s_importance,
                "s_recency": h.s_recency,
                "s_rank": h.s_rank,
            } for h in hits],
            reporter_text=reporter_text,
            rendered_prompt=prompt,
            respond_inputs=respond_inputs,
            response=response,
            caption=context.caption,
            stale_caption=context.stale_caption,
            degraded=degraded,
        )

    # -- day rollover ----------------------------------------------------

    def rollover(self, day: str, now: float) -> tuple[CommitCounts, DistillCounts]:
        """Commit the day's contexts and dialogue, then distill profiles.

        Idempotent per day; a repeat rollover returns the recorded counts
        without re-running the pipeline.
        """
        if day in self.committed_days:
            return self.committed_days[day]
        if not self.config.use_history:
            result = (CommitCounts(0, 0), DistillCounts())
            self.committed_days[day] = result
            return result
        contexts = self.capture_buffer.day_contexts(day)
        turns = [t for t in self.dialogue
                 if _day_of(t.timestamp) == day]
        counts = memory.commit_day(
            self.store, self.bundle, self.user_id, day, contexts, turns,
            self.config.cluster_threshold, self.config.session_gap_s)
        if self.config.use_profile:
            committed = [self.store.get(rid) for rid in counts.record_ids]
            distilled = profile.distill(self.store, self.bundle, self.user_id,
                                        committed, now, self.config.profile_threshold)
        else:
            distilled = DistillCounts()
        self.committed_days[day] = (counts, distilled)
        return counts, distilled

    # -- inspection ------------------------------------------------------

    def get_trace(self, turn_id: str) -> TurnTrace | None:
        return self.traces.get(turn_id)

    def profiles(self) -> list[profile.UserProfile]:
        return profile.profiles_of(self.store)

    def snapshot_bytes(self) -> bytes:
        return self.store.snapshot_bytes()


def _content_words(text: str) -> list[str]:
    from .providers.embedding import tokenize
    # a minimal stop set; enough to make factor attribution meaningful
    stop = {"a", "an", "the", "i", "you", "it", "is", "am", "are", "to", "of",
            "in", "on", "at", "and", "or", "so", "with", "about", "how",
            "your", "my", "me", "day", "here", "going"}
    return [t for t in tokenize(text) if t not in stop]


def _day_of(timestamp: float) -> str:
    from datetime import datetime, timezone
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).strftime("%Y-%m-%d")
