"""Dialogue strategy and information retrieval agents.

The strategy agent plans the conversation (planner) and picks the next
strategy action (decider); the retrieval agent proposes queries (proposer),
executes them against the vector store (worker) and condenses the hits into
a short report (reporter). Their combined output forms the personal context
that drives response generation on the Large completion role.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .capture import RealTimeContext
from .memory import DialogueTurn
from .providers import ProviderBundle, RemoteFailure, TaskTag
from .providers.remote import render_prompt
from .vecstore import Collection, RankedHit, VectorStore

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 5
DEFAULT_WINDOW_TURNS = 10


class StepStatus(enum.Enum):
    PENDING = "Pending"
    DONE = "Done"


@dataclass(frozen=True)
class PlanStep:
    description: str
    status: StepStatus = StepStatus.PENDING


@dataclass(frozen=True)
class StrategyPlan:
    objective: str
    steps: tuple[PlanStep, ...]
    kind: str = "chitchat"
    revision: int = 0

    def pending_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.steps) if s.status is StepStatus.PENDING]

    def to_json_dict(self) -> dict:
        return {
            "objective": self.objective,
            "kind": self.kind,
            "revision": self.revision,
            "steps": [{"description": s.description, "status": s.status.value}
                      for s in self.steps],
        }


@dataclass(frozen=True)
class StrategyAction:
    step_index: int
    directive: str
    evaluation_note: str

    def to_json_dict(self) -> dict:
        return {"step_index": self.step_index, "directive": self.directive,
                "evaluation_note": self.evaluation_note}


class PlanCompleted(Exception):
    """Every plan step is done; the caller should re-plan."""

    def __init__(self, plan: StrategyPlan):
        super().__init__("plan completed")
        self.plan = plan


class QueryTarget(enum.Enum):
    EVENTS = "Events"
    SUMMARIES = "Summaries"
    PROFILES = "Profiles"
    ALL = "All"


_TARGET_COLLECTIONS = {
    QueryTarget.EVENTS: (Collection.EVENTS,),
    QueryTarget.SUMMARIES: (Collection.SUMMARIES,),
    QueryTarget.PROFILES: (Collection.PROFILES,),
    QueryTarget.ALL: (Collection.EVENTS, Collection.SUMMARIES, Collection.PROFILES),
}


@dataclass(frozen=True)
class Query:
    aspect: str
    embedding: np.ndarray = field(repr=False)
    target: QueryTarget = QueryTarget.ALL


@dataclass
class PersonalContext:
    real_time: RealTimeContext
    retrieved: list[RankedHit]
    retrieved_summary: str
    strategy: StrategyAction
    dialogue_window: list[DialogueTurn]


def window_text(turns: list[DialogueTurn], limit: int = DEFAULT_WINDOW_TURNS) -> str:
    recent = turns[-limit:]
    return "\n".join(f"{t.speaker.value}|{t.text}" for t in recent)


_DEFAULT_PLAN = StrategyPlan(
    objective="keep the conversation going",
    steps=(PlanStep("respond conversationally"),),
    kind="chitchat",
)


def plan_strategy(bundle: ProviderBundle, real_time: RealTimeContext,
                  window: list[DialogueTurn],
                  prior: StrategyPlan | None = None) -> StrategyPlan:
    """Produce a plan for the conversation, or refine the prior plan.

    A refine signal (e.g. the user asking for comfort instead of solutions)
    yields a new plan with the revision counter bumped and solution steps
    dropped; otherwise an existing prior plan is kept as-is.
    """
    inputs = {
        "utterance": real_time.utterance,
        "caption": real_time.caption,
        "window": window_text(window),
        "prior_plan": json.dumps(prior.to_json_dict()) if prior else "",
    }
    reply = bundle.complete(TaskTag.PLAN_STRATEGY, inputs)
    try:
        parsed = json.loads(reply)
        steps = tuple(PlanStep(str(d)) for d in parsed["steps"])
        if not steps:
            raise ValueError("empty steps")
        plan = StrategyPlan(objective=str(parsed["objective"]), steps=steps,
                            kind=str(parsed.get("kind", "chitchat")))
    except (ValueError, KeyError, TypeError):
        logger.warning("malformed plan reply; falling back to default plan")
        return _DEFAULT_PLAN if prior is None else prior
    if prior is not None:
        if plan.kind == prior.kind:
            return prior
        plan = replace(plan, revision=prior.revision + 1)
    return plan


def decide_action(bundle: ProviderBundle, plan: StrategyPlan,
                  window: list[DialogueTurn]) -> tuple[StrategyAction, StrategyPlan]:
    """Mark progressed steps done and decide the next action.

    Raises PlanCompleted when no pending steps remain.
    """
    if not plan.pending_indices():
        raise PlanCompleted(plan)
    inputs = {"plan": json.dumps(plan.to_json_dict()), "window": window_text(window)}
    reply = bundle.complete(TaskTag.DECIDE_ACTION, inputs)
    try:
        parsed = json.loads(reply)
        done = [int(i) for i in parsed.get("done", [])]
    except (ValueError, KeyError, TypeError):
        logger.warning("malformed decide reply; acting on first pending step")
        idx = plan.pending_indices()[0]
        return StrategyAction(idx, plan.steps[idx].description, "fallback"), plan

    steps = tuple(
        replace(step, status=StepStatus.DONE) if i in done else step
        for i, step in enumerate(plan.steps)
    )
    updated = replace(plan, steps=steps)
    if parsed.get("completed"):
        raise PlanCompleted(updated)
    idx = int(parsed["step_index"])
    if idx not in updated.pending_indices():
        idx = updated.pending_indices()[0]
    return StrategyAction(idx, str(parsed["directive"]),
                          str(parsed.get("evaluation_note", ""))), updated


def propose_queries(bundle: ProviderBundle, real_time: RealTimeContext,
                    action: StrategyAction) -> list[Query]:
    """1-3 retrieval aspects derived from the utterance, activity and directive."""
    inputs = {
        "utterance": real_time.utterance,
        "activity": real_time.activity,
        "directive": action.directive,
    }
    reply = bundle.complete(TaskTag.PROPOSE_QUERIES, inputs)
    queries: list[Query] = []
    try:
        for item in json.loads(reply):
            queries.append(Query(
                aspect=str(item["aspect"]),
                embedding=bundle.embed(str(item["aspect"])),
                target=QueryTarget(item.get("target", "All")),
            ))
    except (ValueError, KeyError, TypeError):
        logger.warning("malformed query reply; falling back to raw utterance query")
        queries = []
    if not queries:
        aspect = real_time.utterance.strip() or "recent context"
        queries = [Query(aspect=aspect, embedding=bundle.embed(aspect))]
    return queries[:3]


def execute_queries(store: VectorStore, queries: list[Query], k: int, now: float,
                    allowed: set[Collection] | None = None) -> list[RankedHit]:
    """Run each query on its target collection(s); dedup by record id keeping
    the max-rank hit; return the global top-k."""
    if allowed is None:
        allowed = set(Collection)
    best: dict[str, RankedHit] = {}
    for query in queries:
        for collection in _TARGET_COLLECTIONS[query.target]:
            if collection not in allowed:
                continue
            for hit in store.query_top_k(collection, query.embedding, k, now):
                prev = best.get(hit.record.id)
                if prev is None or hit.s_rank > prev.s_rank:
                    best[hit.record.id] = hit
    merged = sorted(best.values(),
                    key=lambda h: (-h.s_rank, -h.record.updated_at, h.record.id))
    return merged[:k]


def report(bundle: ProviderBundle, hits: list[RankedHit], k: int, now: float) -> str:
    """Reporter summary: 'known: ...' lines, at most k."""
    lines = "\n".join(
        f"{h.record.text}|{h.record.importance}|{max(0.0, now - h.record.updated_at) / 86400.0:.1f}"
        for h in hits
    )
    return bundle.complete(TaskTag.REPORT, {"hits": lines, "limit": str(k)})


def build_respond_inputs(context: PersonalContext, use_realtime: bool = True) -> dict:
    """Input fields for the Respond completion; ablated fields are blanked."""
    rt = context.real_time
    return {
        "utterance": rt.utterance,
        "caption": rt.caption if use_realtime else "",
        "location": rt.location if use_realtime else "",
        "activity": rt.activity if use_realtime else "",
        "retrieved": context.retrieved_summary,
        "directive": context.strategy.directive,
        "window": window_text(context.dialogue_window),
    }


def generate_response(bundle: ProviderBundle, context: PersonalContext,
                      use_realtime: bool = True) -> tuple[str, dict, str, bool]:
    """Render the response prompt and call the Large role.

    Returns (response, respond_inputs, rendered_prompt, degraded) where
    degraded marks the canned apology fallback after remote failure.
    """
    inputs = build_respond_inputs(context, use_realtime)
    prompt = render_prompt(TaskTag.RESPOND, inputs)
    try:
        text = bundle.complete(TaskTag.RESPOND, inputs)
        degraded = False
    except RemoteFailure:
        logger.error("response generation failed after retries; sending apology")
        text = ("Sorry, I had trouble coming up with a reply just now. "
                "Could you say that again?")
        degraded = True
    if not text:
        text = "I'm here."
    return text, inputs, prompt, degraded
