"""User profile distillation.

Historical records are summarized into profile proposals (trait statements
like "preference: likes spicy food"). A proposal either becomes a new
profile or is merged into the most similar existing one, with confidence
dynamics that reinforce consistent evidence and erode contradicted traits
until they are replaced outright. Profiles live in the Profiles collection
of the user's vector store; confidence and the append-only revision history
ride along in the record's meta field.

Profile embeddings use the aspect-subject form of the trait (category plus
object, polarity words stripped), so "likes coffee" and "dislikes coffee"
embed identically: retrieval at the similarity threshold then genuinely
finds the profile addressing the same aspect, which the merge step relies
on.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass

from .providers import ProviderBundle, TaskTag
from .providers.embedding import tokenize
from .vecstore import Collection, MemoryRecord, VectorStore, deterministic_ulid

logger = logging.getLogger(__name__)

_POLARITY_WORDS = {
    "likes", "dislikes", "loves", "hates", "enjoys", "avoids", "prefers",
    "never", "always", "usually", "rarely",
}


def aspect_key(aspect_text: str) -> str:
    """Polarity-free form of a trait: 'preference: dislikes coffee' -> 'preference coffee'."""
    head, sep, rest = aspect_text.partition(":")
    if not sep:
        head, rest = "", aspect_text
    tokens = [t for t in tokenize(rest) if t not in _POLARITY_WORDS]
    return " ".join(([head.strip()] if head.strip() else []) + tokens)

DEFAULT_SIMILARITY_THRESHOLD = 0.85
INITIAL_CONFIDENCE = 0.5
REINFORCE_DELTA = 0.1
CONTRADICT_DELTA = 0.2
REPLACE_FLOOR = 0.2
CONFIDENCE_MIN = 0.1
CONFIDENCE_MAX = 1.0
PROFILE_IMPORTANCE = 5  # profiles rank by confidence in the UI, not arousal


class RevisionCause(enum.Enum):
    CREATED = "Created"
    REINFORCED = "Reinforced"
    CONTRADICTED = "Contradicted"
    REPLACED = "Replaced"


@dataclass
class UserProfile:
    """Read view of one stored profile record."""

    record_id: str
    aspect_text: str
    confidence: float
    revisions: list[dict]

    @classmethod
    def from_record(cls, record: MemoryRecord) -> "UserProfile":
        return cls(
            record_id=record.id,
            aspect_text=record.text,
            confidence=record.meta["confidence"],
            revisions=list(record.meta.get("revisions", [])),
        )

    def to_json_dict(self) -> dict:
        return {
            "id": self.record_id,
            "aspect_text": self.aspect_text,
            "confidence": self.confidence,
            "revisions": self.revisions,
        }


@dataclass(frozen=True)
class DistillCounts:
    created: int = 0
    reinforced: int = 0
    contradicted: int = 0
    replaced: int = 0

    def to_json_dict(self) -> dict:
        return {"created": self.created, "reinforced": self.reinforced,
                "contradicted": self.contradicted, "replaced": self.replaced}


def _clamp(confidence: float) -> float:
    return max(CONFIDENCE_MIN, min(CONFIDENCE_MAX, confidence))


def propose_profile(bundle: ProviderBundle, text: str) -> str | None:
    """Trait proposal for a historical context, or None without a trait signal."""
    reply = bundle.complete(TaskTag.PROFILE_PROPOSAL, {"text": text}).strip()
    return reply or None


def retrieve_similar_profile(store: VectorStore, bundle: ProviderBundle,
                             proposal: str,
                             threshold: float = DEFAULT_SIMILARITY_THRESHOLD) -> MemoryRecord | None:
    """Most similar stored profile with cosine strictly above the threshold."""
    return store.best_match_above(Collection.PROFILES,
                                  bundle.embed(aspect_key(proposal)), threshold)


def merge_profiles(bundle: ProviderBundle, existing: MemoryRecord, proposal: str,
                   now: float) -> tuple[MemoryRecord, RevisionCause] | None:
    """Merge a proposal into an existing profile record (same id).

    Consistent evidence reinforces confidence by +0.1 (capped at 1.0);
    contradictions cost 0.2, and once confidence falls below 0.2 the
    proposal replaces the trait text with confidence reset to 0.5. Returns
    None when the merge reply is malformed (no-op, logged).
    """
    reply = bundle.complete(TaskTag.PROFILE_MERGE,
                            {"existing": existing.text, "proposal": proposal})
    try:
        verdict = json.loads(reply)
        consistent = verdict["verdict"] == "consistent"
        merged_text = verdict["merged_text"]
    except (ValueError, KeyError, TypeError) as exc:
        logger.warning("malformed profile merge reply (%s); skipping merge", exc)
        return None

    prior_text = existing.text
    prior_confidence = existing.meta["confidence"]
    if consistent:
        new_text = prior_text
        new_confidence = _clamp(prior_confidence + REINFORCE_DELTA)
        cause = RevisionCause.REINFORCED
    else:
        eroded = _clamp(prior_confidence - CONTRADICT_DELTA)
        if eroded < REPLACE_FLOOR:
            new_text = merged_text
            new_confidence = INITIAL_CONFIDENCE
            cause = RevisionCause.REPLACED
        else:
            new_text = prior_text
            new_confidence = eroded
            cause = RevisionCause.CONTRADICTED

    revisions = list(existing.meta.get("revisions", []))
    revisions.append({
        "timestamp": now,
        "prior_text": prior_text,
        "prior_confidence": prior_confidence,
        "cause": cause.value,
    })
    updated = MemoryRecord(
        id=existing.id,
        collection=Collection.PROFILES,
        text=new_text,
        embedding=bundle.embed(aspect_key(new_text)),
        index_keys=existing.index_keys,
        importance=PROFILE_IMPORTANCE,
        created_at=existing.created_at,
        updated_at=max(now, existing.updated_at),
        user_id=existing.user_id,
        meta={"confidence": new_confidence, "revisions": revisions},
    )
    return updated, cause


def _new_profile_record(bundle: ProviderBundle, user_id: str, proposal: str,
                        now: float) -> MemoryRecord:
    return MemoryRecord(
        id=deterministic_ulid(now, user_id, "profile", proposal),
        collection=Collection.PROFILES,
        text=proposal,
        embedding=bundle.embed(aspect_key(proposal)),
        index_keys=[],
        importance=PROFILE_IMPORTANCE,
        created_at=now,
        updated_at=now,
        user_id=user_id,
        meta={"confidence": INITIAL_CONFIDENCE,
              "revisions": [{"timestamp": now, "prior_text": "",
                             "prior_confidence": 0.0,
                             "cause": RevisionCause.CREATED.value}]},
    )


def distill(store: VectorStore, bundle: ProviderBundle, user_id: str,
            historical: list[MemoryRecord], now: float,
            threshold: float = DEFAULT_SIMILARITY_THRESHOLD) -> DistillCounts:
    """Propose/retrieve/merge over a batch of historical records, atomically.

    The batch runs against a staging copy of the Profiles collection and is
    committed to the live store only if every step succeeds.
    """
    staging = VectorStore(user_id, store.dims)
    for record in store.records(Collection.PROFILES):
        staging.upsert(record)

    created = reinforced = contradicted = replaced = 0
    touched: dict[str, MemoryRecord] = {}
    for record in historical:
        proposal = propose_profile(bundle, record.text)
        if proposal is None:
            continue
        existing = retrieve_similar_profile(staging, bundle, proposal, threshold)
        if existing is None:
            fresh = _new_profile_record(bundle, user_id, proposal, now)
            staging.upsert(fresh)
            touched[fresh.id] = fresh
            created += 1
            continue
        merge = merge_profiles(bundle, existing, proposal, now)
        if merge is None:
            continue
        updated, cause = merge
        staging.upsert(updated)
        touched[updated.id] = updated
        if cause is RevisionCause.REINFORCED:
            reinforced += 1
        elif cause is RevisionCause.CONTRADICTED:
            contradicted += 1
        else:
            replaced += 1

    for record in touched.values():
        store.upsert(record)
    return DistillCounts(created, reinforced, contradicted, replaced)


def profiles_of(store: VectorStore) -> list[UserProfile]:
    return [UserProfile.from_record(r) for r in store.records(Collection.PROFILES)]
