"""Scripted personas and their planted facts.

Personas are deterministic templates: an occupation fixes the pool of daily
scenes, and each persona carries planted facts (preferences, habits,
experiences) scheduled to be dropped into conversation on known days. Every
fact has a detectable token plus a probe (question + scene) used afterwards
to measure whether responses recall or contradict it.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from importlib import resources


class FactCategory(enum.Enum):
    PREFERENCE = "Preference"
    HABIT = "Habit"
    EXPERIENCE = "Experience"


@dataclass(frozen=True)
class Probe:
    utterance: str
    scene: str
    success_tokens: tuple[str, ...]
    against_token: str = ""


@dataclass(frozen=True)
class PlantedFact:
    fact: str                 # the utterance dropped into conversation
    category: FactCategory
    day_introduced: int       # 1-based simulated day
    detect_token: str
    probe: Probe


@dataclass(frozen=True)
class SceneTuple:
    day: int
    start_hhmm: str
    end_hhmm: str
    location: str
    activity: str
    description: str


@dataclass(frozen=True)
class Persona:
    name: str
    age: int
    gender: str
    occupation: str
    mbti_label: str
    preferences: tuple[str, ...]
    habits: tuple[str, ...]
    planted_facts: tuple[PlantedFact, ...]


def _load_names() -> dict:
    ref = resources.files("companion.simbench").joinpath("data").joinpath("names.json")
    return json.loads(ref.read_text(encoding="utf-8"))


# scene descriptions deliberately hit the reference caption keyword table so
# location/activity inference and event clustering behave like the live path
SCENE_POOLS: dict[str, list[tuple[str, str, str]]] = {
    "chemistry student": [
        ("laboratory", "doing experiments", "A table filled with beakers and test tubes."),
        ("classroom", "attending a lecture", "a classroom with a whiteboard full of notes"),
        ("library", "reading", "rows of books on a library bookshelf"),
        ("gym", "playing badminton", "a gym hall with badminton courts"),
        ("park", "relaxing outdoors", "a park with trees and a wide lawn"),
        ("kitchen", "cooking", "a kitchen with a stove and chopping board"),
        ("transit", "commuting", "a crowded subway platform"),
        ("living room", "relaxing", "a sofa facing a television in a living room"),
    ],
    "software engineer": [
        ("office", "working", "a desk with a laptop and a second monitor"),
        ("meeting room", "in a meeting", "a meeting room with a long conference table"),
        ("cafe", "having a drink", "a quiet cafe with an espresso machine"),
        ("gym", "working out", "a gym with a treadmill and dumbbells"),
        ("transit", "commuting", "a train pulling into a subway platform"),
        ("kitchen", "cooking", "a kitchen counter with a chopping board"),
        ("living room", "relaxing", "a living room with a sofa and a television"),
        ("park", "relaxing outdoors", "a park lawn with tall trees"),
    ],
    "teacher": [
        ("classroom", "attending a lecture", "a classroom with a blackboard and desks"),
        ("library", "reading", "a library bookshelf stacked with books"),
        ("office", "working", "a desk with a laptop and stacks of homework"),
        ("park", "relaxing outdoors", "a park path under trees"),
        ("kitchen", "cooking", "a stove with a simmering pot in a kitchen"),
        ("restaurant", "having a meal", "a restaurant table with a menu"),
        ("transit", "commuting", "a bus stopping by the platform"),
        ("living room", "relaxing", "a cozy living room with a sofa"),
    ],
    "nurse": [
        ("clinic", "seeing patients", "a clinic corridor with a stethoscope on a desk"),
        ("transit", "commuting", "an early morning subway platform"),
        ("kitchen", "cooking", "a kitchen with a stove and kettle"),
        ("park", "relaxing outdoors", "a small park with blooming trees"),
        ("gym", "working out", "a gym corner with dumbbells"),
        ("living room", "relaxing", "a living room sofa with cushions"),
        ("restaurant", "having a meal", "a busy restaurant with a menu board"),
        ("library", "reading", "a reading table beside a library bookshelf"),
    ],
    "writer": [
        ("office", "working", "a desk with a laptop and scattered notes"),
        ("cafe", "having a drink", "a corner cafe with an espresso bar"),
        ("library", "reading", "tall library bookshelves full of books"),
        ("park", "relaxing outdoors", "a park bench under the trees"),
        ("kitchen", "cooking", "a small kitchen with a stove"),
        ("living room", "relaxing", "a living room with a sofa and lamps"),
        ("trail", "jogging", "a running trail through the woods"),
        ("transit", "commuting", "a quiet train platform"),
    ],
    "painter": [
        ("studio", "painting", "an easel with a half-finished canvas in a studio"),
        ("park", "relaxing outdoors", "a park meadow with old trees"),
        ("cafe", "having a drink", "a sunny cafe with an espresso machine"),
        ("living room", "relaxing", "a living room with a sofa and paintings"),
        ("kitchen", "cooking", "a kitchen with a chopping board and stove"),
        ("transit", "commuting", "a tram platform in the morning"),
        ("library", "reading", "an art section bookshelf in a library"),
        ("street", "walking around", "a commercial street with small shops"),
    ],
    "chef": [
        ("kitchen", "cooking", "a professional kitchen with a large stove"),
        ("restaurant", "having a meal", "a restaurant dining room with menus"),
        ("street", "walking around", "a market street with storefront stands"),
        ("park", "relaxing outdoors", "a green park with a lawn"),
        ("living room", "relaxing", "a living room sofa and a television"),
        ("transit", "commuting", "a subway platform at dawn"),
        ("office", "working", "a small office desk with a laptop"),
        ("gym", "working out", "a gym with a treadmill"),
    ],
    "musician": [
        ("music room", "practicing music", "a music room with a piano and sheet music"),
        ("studio", "painting", "a recording studio with a canvas of cables"),
        ("cafe", "having a drink", "a cafe stage beside an espresso bar"),
        ("living room", "relaxing", "a living room with a sofa and a guitar"),
        ("transit", "commuting", "a late train platform"),
        ("park", "relaxing outdoors", "a park bandstand among trees"),
        ("library", "reading", "a music theory bookshelf in a library"),
        ("street", "walking around", "a commercial street with music shops"),
    ],
}

# (dropped utterance fragments, probes) per fact family
_DISLIKE_POOL = [
    ("coffee", "milk tea", "drink"),
    ("pizza", "noodle", "eat"),
    ("soda", "juice", "drink"),
]
_LIKE_POOL = ["spicy food", "green tea", "fruit jelly", "sweet desserts"]
# planted utterances carry an arousal word on purpose: emotionally intense
# memories score higher importance, which is exactly what keeps them
# retrievable days later
_HABIT_POOL = [
    ("jog in the morning", "jog", "what do I usually do in the morning?"),
    ("read before bed", "read", "what do I usually do before bed?"),
    ("cook dinner at home", "cook", "what do I usually do for dinner?"),
    ("stretch in the evening", "stretch", "what do I usually do in the evening?"),
]
_EXPERIENCE_POOL = [
    ("visited the science museum today, it was amazing", "museum",
     "do you remember when I visited the science museum?"),
    ("went to the dentist today, it was terrible", "dentist",
     "do you remember when I went to the dentist?"),
    ("watched a shocking documentary about volcanoes", "volcanoes",
     "do you remember the documentary about volcanoes I watched?"),
    ("finished a painting of the harbor, I love it", "harbor",
     "do you remember the painting of the harbor I finished?"),
]


def _make_facts(rng: random.Random, days: int) -> tuple[PlantedFact, ...]:
    """One fact per category, introduced on distinct early days."""
    facts: list[PlantedFact] = []
    intro_days = rng.sample(range(2, min(6, days) + 1), 3) if days >= 4 else [2, 2, 2]

    disliked, alt, verb = rng.choice(_DISLIKE_POOL)
    facts.append(PlantedFact(
        fact=f"I never {verb} {disliked}",
        category=FactCategory.PREFERENCE,
        day_introduced=intro_days[0],
        detect_token=alt,
        probe=Probe(
            utterance=f"what should I {verb}?",
            scene=f"a commercial street with a {disliked} shop and a {alt} shop",
            success_tokens=(alt,),
            against_token=disliked,
        ),
    ))

    habit, habit_token, habit_probe = rng.choice(_HABIT_POOL)
    facts.append(PlantedFact(
        fact=f"I always {habit}, I love it",
        category=FactCategory.HABIT,
        day_introduced=intro_days[1],
        detect_token=habit_token,
        probe=Probe(
            utterance=habit_probe,
            scene="a park with trees and a wide lawn",
            success_tokens=(habit_token,),
        ),
    ))

    exp, exp_token, exp_probe = rng.choice(_EXPERIENCE_POOL)
    facts.append(PlantedFact(
        fact=f"I {exp}",
        category=FactCategory.EXPERIENCE,
        day_introduced=intro_days[2],
        detect_token=exp_token,
        probe=Probe(
            utterance=exp_probe,
            scene="a living room with a sofa and a television",
            success_tokens=(exp_token,),
        ),
    ))
    return tuple(facts)


def build_personas(count: int = 20, days: int = 10, seed: int = 0) -> list[Persona]:
    """Deterministic persona set: half male, half female, occupations cycled."""
    names = _load_names()
    rng = random.Random(f"personas|{seed}")
    occupations = sorted(SCENE_POOLS)
    personas: list[Persona] = []
    males = list(names["male"])
    females = list(names["female"])
    for i in range(count):
        gender = "male" if i % 2 == 0 else "female"
        pool = males if gender == "male" else females
        name = pool[(i // 2) % len(pool)]
        prng = random.Random(f"persona|{seed}|{i}|{name}")
        facts = _make_facts(prng, days)
        likes = prng.choice(_LIKE_POOL)
        personas.append(Persona(
            name=name,
            age=prng.randint(15, 60),
            gender=gender,
            occupation=occupations[i % len(occupations)],
            mbti_label=names["mbti"][prng.randrange(len(names["mbti"]))],
            preferences=(f"likes {likes}",),
            habits=tuple(f.fact for f in facts if f.category is FactCategory.HABIT),
            planted_facts=facts,
        ))
    return personas
