"""Deterministic reference providers.

Captioner and transcriber resolve opaque references through fixture tables.
The completer executes every task tag with rule-table logic loaded from
``data/rules.json``, so identical (tag, inputs, seed) always yields the
identical reply. The per-tag behaviors are documented where they are
consumed (capture, memory, profile, agents).
"""

from __future__ import annotations

import json
import re
from collections import Counter

from . import MissingField, TaskTag, UnknownAudio, UnknownFrame, load_packaged_json
from .embedding import tokenize


class FixtureCaptioner:
    """Returns captions from an {id -> text} fixture table."""

    def __init__(self, frames: dict[str, str]):
        self._frames = dict(frames)

    def add(self, frame_id: str, caption: str) -> None:
        self._frames[frame_id] = caption

    def __call__(self, frame: str) -> str:
        if frame not in self._frames:
            raise UnknownFrame(f"no fixture caption for frame {frame!r}")
        return self._frames[frame]


class FixtureTranscriber:
    """Returns transcripts from an {id -> text} fixture table.

    An empty reference is legal and transcribes to the empty string.
    """

    def __init__(self, audio: dict[str, str]):
        self._audio = dict(audio)

    def add(self, audio_id: str, transcript: str) -> None:
        self._audio[audio_id] = transcript

    def __call__(self, audio: str) -> str:
        if audio == "":
            return ""
        if audio not in self._audio:
            raise UnknownAudio(f"no fixture transcript for audio {audio!r}")
        return self._audio[audio]


# Object tails cut off when extracting short preference objects; habit
# objects keep their modifiers but stop at clause boundaries.
_TIGHT_CUT = {
    "in", "on", "at", "when", "because", "since", "during", "before",
    "after", "with", "while", "and", "or", "but", "so", "to", "this",
    "these", "that", "for", "every",
}
_LOOSE_CUT = {"and", "or", "but", "then", "because", "so", "while", "since"}

_OPTION_RE = re.compile(r"\ba ((?:[a-z]+ )?[a-z]+) (shop|stand|place|stall|restaurant|cafe)\b")
_DISLIKE_RE = re.compile(r"dislikes ([a-z][a-z ]*[a-z])")
_LIKE_RE = re.compile(r"(?<!dis)likes ([a-z][a-z ]*[a-z])")
_PHRASE_CUT_RE = re.compile(r"[^a-z ]")


class ReferenceCompleter:
    """Rule-table completer covering every task tag."""

    def __init__(self, rules: dict | None = None):
        self.rules = rules if rules is not None else load_packaged_json("rules.json")
        self._stop = set(self.rules["stopwords"])
        self._arousal = set(self.rules["arousal"])
        self._negative = set(self.rules["negative_emotion"])
        self._positive = set(self.rules["positive_emotion"])
        self._time_words = set(self.rules["time_words"])
        self._profile_patterns = [
            (re.compile(p["regex"]), p["template"], p["polarity"])
            for p in self.rules["profile_patterns"]
        ]
        self._rewrites = [
            (re.compile(pat), repl) for pat, repl in self.rules["first_person_rewrites"]
        ]
        verbs = "|".join(re.escape(v) for v in self.rules["verb_object_patterns"])
        self._verb_obj_re = re.compile(
            r"\b(" + verbs + r")\s+((?:a|an|the)\s+)?([a-z]+)(\s+[a-z]+)?"
        )

    def __call__(self, tag: TaskTag, inputs: dict, seed: int = 0) -> str:
        handler = {
            TaskTag.LOC_ACTIVITY: self.loc_activity,
            TaskTag.EVENT_SUMMARY: self.event_summary,
            TaskTag.SESSION_SUMMARY: self.session_summary,
            TaskTag.INDEX_KEYS: self.index_keys,
            TaskTag.IMPORTANCE: self.importance,
            TaskTag.PROFILE_PROPOSAL: self.profile_proposal,
            TaskTag.PROFILE_MERGE: self.profile_merge,
            TaskTag.PLAN_STRATEGY: self.plan_strategy,
            TaskTag.DECIDE_ACTION: self.decide_action,
            TaskTag.PROPOSE_QUERIES: self.propose_queries,
            TaskTag.REPORT: self.report,
            TaskTag.RESPOND: self.respond,
        }[tag]
        return handler(inputs)

    # -- helpers -------------------------------------------------------

    def content_words(self, text: str) -> list[str]:
        return [t for t in tokenize(text) if t not in self._stop]

    def _has_any(self, text: str, markers) -> bool:
        return any(m in text for m in markers)

    def _negative_turn(self, text: str) -> bool:
        tokens = set(tokenize(text))
        if tokens & self._positive:
            return False
        return bool(tokens & self._negative)

    # -- per-tag behaviors ---------------------------------------------

    def loc_activity(self, inputs: dict) -> str:
        combined = f"{inputs['caption']} {inputs['utterance']}".lower()
        for rule in self.rules["loc_activity"]:
            if self._has_any(combined, rule["any"]):
                return f"{rule['location']} | {rule['activity']}"
        return "unknown | unknown"

    def event_summary(self, inputs: dict) -> str:
        members = [line.split("|") for line in inputs["members"].splitlines() if line]
        if not members:
            raise MissingField("EventSummary requires at least one member line")
        timestamps = [m[0] for m in members]
        location = _modal([m[1] for m in members])
        activity = _modal([m[2] for m in members])
        return f"From {timestamps[0]} to {timestamps[-1]}, at {location}, {activity}"

    def session_summary(self, inputs: dict) -> str:
        turns = [line.split("|", 1) for line in inputs["turns"].splitlines() if line]
        user_texts = [text for speaker, text in turns if speaker.lower() == "user"]
        if not user_texts:
            return "Topics: (system only)"
        topics: list[str] = []
        for text in user_texts:
            for word in self.content_words(text):
                if word not in topics:
                    topics.append(word)
                if len(topics) == 3:
                    break
            if len(topics) == 3:
                break
        clauses = [self._third_person(t) for t in user_texts]
        details = " and ".join(c for c in clauses if c)
        topic_str = ", ".join(topics) if topics else "(chitchat)"
        return f"Topics: {topic_str}. The user mentions {details}."

    def _third_person(self, text: str) -> str:
        clause = text.strip().rstrip(".!?").lower()
        for pattern, repl in self._rewrites:
            new = pattern.sub(repl, clause, count=1)
            if new != clause:
                return new.strip()
        return clause

    def index_keys(self, inputs: dict) -> str:
        text = inputs["text"]
        lowered = text.lower()
        keys: list[str] = []
        # temporal: explicit span wins, else a time word from the lexicon
        start = inputs.get("start", "")
        if start:
            keys.append(f"on {start.split(' ')[0]}")
        else:
            for word in tokenize(lowered):
                if word in self._time_words:
                    keys.append(f"{word} plan" if "plan" in lowered else word)
                    break
        # spatial: explicit location, else a prepositional place phrase
        location = inputs.get("location", "")
        if location and location != "unknown":
            keys.append(f"at the {location}")
        else:
            m = re.search(r"\b(in|at) the ([a-z]+)\b", lowered)
            if m and m.group(2) not in self._time_words:
                keys.append(f"{m.group(1)} the {m.group(2)}")
        # semantic: up to two verb-object phrases, else frequent content words
        semantic: list[str] = []
        pos = 0
        while len(semantic) < 2:
            m = self._verb_obj_re.search(lowered, pos)
            if not m:
                break
            pos = m.start(1) + len(m.group(1))  # overlap scan: resume after the verb
            obj_head = m.group(3)
            if obj_head in self._stop or obj_head in self._time_words:
                continue
            phrase = m.group(1) + " " + (m.group(2) or "") + obj_head
            tail = (m.group(4) or "").strip()
            if tail and tail not in self._stop and tail not in self._time_words:
                phrase += " " + tail
            phrase = " ".join(phrase.split())
            if phrase not in semantic:
                semantic.append(phrase)
        if not semantic:
            counts = Counter(self.content_words(lowered))
            semantic = [w for w, _ in counts.most_common(2)]
        keys.extend(semantic)
        deduped: list[str] = []
        for key in keys:
            if key and key not in deduped:
                deduped.append(key)
        return "; ".join(deduped[:4])

    def importance(self, inputs: dict) -> str:
        hits = sum(1 for t in tokenize(inputs["text"]) if t in self._arousal)
        return str(max(1, min(10, 3 + 2 * hits)))

    def profile_proposal(self, inputs: dict) -> str:
        text = inputs["text"].lower()
        for pattern, template, polarity in self._profile_patterns:
            m = pattern.search(text)
            if m:
                obj = self._trim_object(m.group(1), tight=polarity != "habit")
                # a trait needs a contentful object ("likes it" is not one)
                if obj and any(t not in self._stop for t in obj.split()):
                    return template.format(obj=obj)
        return ""

    def _trim_object(self, obj: str, tight: bool) -> str:
        words = obj.split()
        cut = _TIGHT_CUT if tight else _LOOSE_CUT
        kept: list[str] = []
        for word in words:
            if word in cut:
                break
            kept.append(word)
            if len(kept) == (4 if tight else 6):
                break
        return " ".join(kept)

    def profile_merge(self, inputs: dict) -> str:
        existing = inputs["existing"].lower()
        proposal = inputs["proposal"].lower()
        verdict = "contradictory" if self._contradicts(existing, proposal) else "consistent"
        merged = inputs["existing"] if verdict == "consistent" else inputs["proposal"]
        return json.dumps({"verdict": verdict, "merged_text": merged})

    def _contradicts(self, existing: str, proposal: str) -> bool:
        for head_a, head_b in self.rules["antonym_heads"]:
            for first, second in ((head_a, head_b), (head_b, head_a)):
                if first in existing.split() and second in proposal.split():
                    obj_a = set(self.content_words(existing)) - {first, second}
                    obj_b = set(self.content_words(proposal)) - {first, second}
                    if obj_a & obj_b:
                        return True
        return False

    def plan_strategy(self, inputs: dict) -> str:
        utterance = inputs["utterance"].lower()
        plans = self.rules["plans"]
        prior = inputs.get("prior_plan", "")
        if prior and self._has_any(utterance, self.rules["comfort_request_markers"]):
            chosen, kind = plans["comfort"], "comfort"
        elif self._negative_turn(utterance) or "i feel" in utterance:
            chosen, kind = plans["support"], "support"
        elif "?" in inputs["utterance"] or re.match(
            r"^(what|who|how|why|when|where|can|could|do|does|is|are|should)\b", utterance
        ):
            chosen, kind = plans["answer"], "answer"
        else:
            chosen, kind = plans["chitchat"], "chitchat"
        return json.dumps(
            {"objective": chosen["objective"], "steps": list(chosen["steps"]), "kind": kind}
        )

    def decide_action(self, inputs: dict) -> str:
        plan = json.loads(inputs["plan"])
        turns = [line.split("|", 1) for line in inputs["window"].splitlines() if line]
        system_text = " ".join(
            text.lower() for speaker, text in turns if speaker.lower() == "system"
        )
        last_user = next(
            (text for speaker, text in reversed(turns) if speaker.lower() == "user"), ""
        )
        done: list[int] = []
        for idx, step in enumerate(plan["steps"]):
            if step["status"] == "Done":
                continue
            for sig in self.rules["step_signatures"]:
                if sig["step_contains"] in step["description"].lower() and self._has_any(
                    system_text, sig["reply_contains"]
                ):
                    done.append(idx)
                    break
        pending = [
            i for i, step in enumerate(plan["steps"])
            if step["status"] != "Done" and i not in done
        ]
        if not pending:
            return json.dumps({"done": done, "completed": True})
        if plan.get("kind") in ("support", "comfort") and self._negative_turn(last_user):
            return json.dumps({
                "done": done,
                "completed": False,
                "step_index": pending[0],
                "directive": "address the emotional distress",
                "evaluation_note": "emotions haven't been calmed",
            })
        return json.dumps({
            "done": done,
            "completed": False,
            "step_index": pending[0],
            "directive": plan["steps"][pending[0]]["description"],
            "evaluation_note": "proceeding with the plan",
        })

    def propose_queries(self, inputs: dict) -> str:
        basis = f"{inputs['utterance']} {inputs['directive']} {inputs['activity']}".lower()
        queries: list[dict] = []
        seen: set[str] = set()
        for rule in self.rules["query_rules"]:
            if self._has_any(basis, rule["any"]):
                for query in rule["queries"]:
                    if query["aspect"] not in seen and len(queries) < 2:
                        queries.append(dict(query))
                        seen.add(query["aspect"])
            if len(queries) >= 2:
                break
        # the user's own content words are always one retrieval aspect: rule
        # aspects carry the dimension, these carry the specifics
        content = " ".join(self.content_words(inputs["utterance"]))
        if content and content not in seen:
            queries.append({"aspect": content, "target": "All"})
        if not queries:
            fallback = inputs["utterance"].strip() or inputs["activity"].strip() or "recent context"
            queries = [{"aspect": fallback, "target": "All"}]
        return json.dumps(queries[:3])

    def report(self, inputs: dict) -> str:
        lines = [line for line in inputs["hits"].splitlines() if line]
        if not lines:
            return "no relevant personal information"
        limit = int(inputs["limit"])
        rendered = []
        for line in lines[:limit]:
            text, importance, age_days = line.rsplit("|", 2)
            rendered.append(f"known: {text} (importance {importance}, age {age_days}d)")
        return "\n".join(rendered)

    def respond(self, inputs: dict) -> str:
        templates = self.rules["respond_templates"]
        utterance = inputs["utterance"].lower()
        caption = inputs["caption"].lower()
        retrieved = inputs["retrieved"].lower()
        directive = inputs["directive"].lower()

        options = _OPTION_RE.findall(caption)
        disliked = [d.strip() for d in _DISLIKE_RE.findall(retrieved)]
        liked = [l.strip() for l in _LIKE_RE.findall(retrieved)]

        # avoid a known dislike when the scene offers alternatives
        if len(options) >= 2 and disliked:
            for dis in disliked:
                dis_tokens = set(dis.split())
                conflicted = [o for o in options if set(o[0].split()) & dis_tokens]
                if conflicted:
                    safe = [o for o in options if not (set(o[0].split()) & dis_tokens)]
                    if safe:
                        alt, kind = safe[0]
                        return templates["recommend_alternative"].format(
                            alt=alt, kind=kind, disliked=dis
                        )
        choice = self._has_any(utterance, self.rules["choice_markers"])
        if choice and liked:
            return templates["recommend_liked"].format(liked=liked[0])
        if retrieved and self._has_any(utterance, self.rules["recall_markers"]):
            # quote the retrieved line sharing the most content words with the
            # question; ties resolve to the highest-ranked line
            wanted = set(self.content_words(utterance))
            lines = retrieved.splitlines()
            detail = max(lines, key=lambda l: len(wanted & set(self.content_words(l))))
            detail = re.sub(r"^known: ", "", detail)
            detail = re.sub(r" \(importance .*\)$", "", detail)
            if "the user mentions " in detail:
                detail = detail.split("the user mentions ", 1)[1]
            return templates["recall_quote"].format(detail=detail[:140].rstrip("."))
        if "emotional distress" in directive or "affirm" in directive:
            return templates["support_affirm"]
        if "explore" in directive or "caus" in directive:
            return templates["support_explore"]
        if "resolving" in directive or "stay with" in directive:
            return templates["support_resolve"]
        if choice and options:
            option, kind = options[0]
            return templates["recommend_first"].format(option=option, kind=kind)
        if caption:
            nouns = self.content_words(caption)
            noun = nouns[0] if nouns else "the scene"
            if "open question" in directive:
                return templates["scene_comment"].format(
                    noun=noun, followup="How is your day going?"
                )
            return templates["scene_greeting"].format(noun=noun)
        return templates["generic"]


def _modal(values: list[str]) -> str:
    """Most frequent value; ties resolve to the earliest first occurrence."""
    counts = Counter(values)
    best = max(counts.values())
    for value in values:
        if counts[value] == best:
            return value
    raise AssertionError("unreachable for nonempty input")
