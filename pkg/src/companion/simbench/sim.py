"""In-lab simulation protocol: schedules, scripted dialogues, ablations.

Each persona lives through a fixed number of simulated days with eight
scenes per day; three scenes host a three-round conversation, planted facts
are dropped on their scheduled days, and every day ends with a rollover.
After the run, rule-generated probes measure planted-fact recall and
contradictions per ablation configuration, and per-day factor attribution
shares come straight from the turn traces.
"""

from __future__ import annotations

import csv
import io
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from ..engine import (
    FACTOR_HISTORICAL,
    FACTOR_LANGUAGE_MODEL,
    FACTOR_PROFILE,
    FACTOR_REAL_TIME,
    EngineConfig,
    TurnTrace,
    UserEngine,
)
from ..providers import ProviderBundle, reference_bundle
from .personas import FactCategory, Persona, PlantedFact, SceneTuple, SCENE_POOLS

BASE_DAY = datetime(2023, 11, 1, tzinfo=timezone.utc)
SLOT_TIMES = ["08:00", "09:30", "11:00", "12:30", "14:00", "15:30", "17:00", "18:30"]
FRAME_INTERVAL_S = 10.0
# slow recency decay for multi-day protocol runs, in the spirit of the
# generative-agents memory stream the rank score follows
SIM_HALF_LIFE_S = 5 * 24 * 3600.0

FACTORS = (FACTOR_REAL_TIME, FACTOR_HISTORICAL, FACTOR_PROFILE, FACTOR_LANGUAGE_MODEL)


@dataclass(frozen=True)
class AblationConfig:
    name: str
    use_profile: bool
    use_history: bool
    use_realtime: bool

    def engine_config(self, base: EngineConfig | None = None) -> EngineConfig:
        return (base or EngineConfig()).with_flags(
            use_profile=self.use_profile,
            use_history=self.use_history,
            use_realtime=self.use_realtime,
        )


PRESETS: dict[str, AblationConfig] = {
    "OS-1": AblationConfig("OS-1", True, True, True),
    "w/o P": AblationConfig("w/o P", False, True, True),
    "w/o PH": AblationConfig("w/o PH", False, False, True),
    "w/o PHR": AblationConfig("w/o PHR", False, False, False),
}


def day_string(day: int) -> str:
    return (BASE_DAY + timedelta(days=day - 1)).strftime("%Y-%m-%d")


def slot_timestamp(day: int, hhmm: str) -> float:
    hour, minute = map(int, hhmm.split(":"))
    return (BASE_DAY + timedelta(days=day - 1, hours=hour, minutes=minute)).timestamp()


def generate_schedule(persona: Persona, days: int = 10, scenes_per_day: int = 8,
                      seed: int = 0) -> list[SceneTuple]:
    """Deterministic schedule: scenes_per_day tuples per day drawn from the
    persona's occupation pool, with contiguous repeats (real days are
    redundant, which is what event clustering removes)."""
    pool = SCENE_POOLS[persona.occupation]
    rng = random.Random(f"schedule|{seed}|{persona.name}")
    schedule: list[SceneTuple] = []
    for day in range(1, days + 1):
        picks = rng.sample(range(len(pool)), min(5, len(pool)))
        blocks: list[int] = []
        while len(blocks) < scenes_per_day:
            idx = picks[len(blocks) % len(picks)] if not blocks else blocks[-1]
            repeat = rng.random() < 0.45 and blocks
            if repeat:
                blocks.append(blocks[-1])
            else:
                blocks.append(picks[rng.randrange(len(picks))])
        slots = (SLOT_TIMES * ((scenes_per_day // len(SLOT_TIMES)) + 1))[:scenes_per_day]
        for slot_idx, scene_idx in enumerate(blocks[:scenes_per_day]):
            location, activity, description = pool[scene_idx]
            end = slots[slot_idx + 1] if slot_idx + 1 < len(slots) else "20:00"
            schedule.append(SceneTuple(
                day=day, start_hhmm=slots[slot_idx], end_hhmm=end,
                location=location, activity=activity, description=description))
    return schedule


_CHITCHAT = [
    "the weather is lovely today",
    "it has been a steady day so far",
    "I am taking a short break now",
    "things are moving along nicely",
]
_RECALL_LINES = [
    "what did I do recently?",
    "do you remember what I was up to recently?",
]


def _script_turn(persona: Persona, scene: SceneTuple, round_idx: int, day: int,
                 pending_fact: PlantedFact | None, rng: random.Random) -> str:
    if round_idx == 0:
        return f"here I am at the {scene.location}"
    if round_idx == 1:
        if pending_fact is not None:
            return pending_fact.fact
        return _CHITCHAT[rng.randrange(len(_CHITCHAT))]
    if day == 1:
        return "how is your day going?"
    return _RECALL_LINES[rng.randrange(len(_RECALL_LINES))]


@dataclass
class SimResult:
    persona: Persona
    config: AblationConfig
    engine: UserEngine
    traces_by_day: dict[int, list[TurnTrace]] = field(default_factory=dict)
    transcript: list[dict] = field(default_factory=list)
    user_turns: int = 0
    sessions: int = 0

    def snapshot_bytes(self) -> bytes:
        return self.engine.snapshot_bytes()


def simulate_dialogues(persona: Persona, schedule: list[SceneTuple],
                       config: AblationConfig, days: int = 10,
                       sessions_per_day: int = 3, rounds: int = 3,
                       seed: int = 0, bundle: ProviderBundle | None = None,
                       base_engine_config: EngineConfig | None = None) -> SimResult:
    """Drive one persona's engine through the scripted protocol."""
    bundle = bundle or reference_bundle()
    if base_engine_config is None:
        base_engine_config = EngineConfig(half_life_s=SIM_HALF_LIFE_S)
    engine = UserEngine(persona.name, bundle, config.engine_config(base_engine_config))
    rng = random.Random(f"dialogue|{seed}|{persona.name}|{config.name}")
    result = SimResult(persona, config, engine)

    by_day: dict[int, list[SceneTuple]] = {}
    for scene in schedule:
        by_day.setdefault(scene.day, []).append(scene)

    dropped: set[str] = set()
    for day in range(1, days + 1):
        scenes = by_day.get(day, [])
        day_traces: list[TurnTrace] = []
        session_idxs = sorted(rng.sample(range(len(scenes)), min(sessions_per_day,
                                                                 len(scenes))))
        due = [f for f in persona.planted_facts
               if f.day_introduced == day and f.fact not in dropped]
        for scene in scenes:
            engine.ingest_frame(slot_timestamp(day, scene.start_hhmm),
                                caption=scene.description)
        for s_num, scene_idx in enumerate(session_idxs):
            scene = scenes[scene_idx]
            start = slot_timestamp(day, scene.start_hhmm) + 120.0
            # frames keep arriving at the capture cadence during the session
            for k in range(rounds * 3):
                engine.ingest_frame(start - 5.0 + k * FRAME_INTERVAL_S,
                                    caption=scene.description)
            ts = start
            for round_idx in range(rounds):
                fact = due.pop(0) if (round_idx == 1 and s_num == 0 and due) else None
                if fact is not None:
                    dropped.add(fact.fact)
                text = _script_turn(persona, scene, round_idx, day, fact, rng)
                trace = engine.respond(ts, text)
                day_traces.append(trace)
                result.transcript.append({
                    "day": day, "session": s_num, "round": round_idx,
                    "user": text, "system": trace.response,
                    "primary_factor": trace.primary_factor,
                })
                result.user_turns += 1
                ts += 30.0
            result.sessions += 1
        engine.rollover(day_string(day), now=slot_timestamp(day, "23:50"))
        result.traces_by_day[day] = day_traces
    return result


@dataclass(frozen=True)
class ProbeOutcome:
    category: FactCategory
    recalled: bool
    contradicted: bool


def probe_grounding(result: SimResult, probe_day: int | None = None) -> list[ProbeOutcome]:
    """Replay each planted fact's probe against the post-run engine."""
    engine = result.engine
    day = probe_day if probe_day is not None else max(result.traces_by_day, default=0) + 1
    outcomes: list[ProbeOutcome] = []
    ts = slot_timestamp(day, "08:00")
    for fact in result.persona.planted_facts:
        engine.ingest_frame(ts - 5.0, caption=fact.probe.scene)
        trace = engine.respond(ts, fact.probe.utterance)
        lowered = trace.response.lower()
        recalled = any(tok in lowered for tok in fact.probe.success_tokens)
        contradicted = bool(
            fact.probe.against_token
            and f"how about the {fact.probe.against_token}" in lowered
        )
        outcomes.append(ProbeOutcome(fact.category, recalled, contradicted))
        ts += 1200.0  # leave a session gap between probes
    return outcomes


@dataclass
class ConfigReport:
    config: AblationConfig
    recall: float
    recall_by_category: dict[str, float]
    contradiction_rate: float
    shares: dict[str, float]
    day1_hp_share: float
    late_hp_share: float


@dataclass
class AblationReport:
    rows: list[ConfigReport]
    snapshots: dict[tuple[str, str], bytes]
    seed: int
    personas: int
    days: int

    def row(self, name: str) -> ConfigReport:
        return next(r for r in self.rows if r.config.name == name)

    def recall_ordering_ok(self) -> bool:
        order = ["OS-1", "w/o P", "w/o PH", "w/o PHR"]
        values = [self.row(n).recall for n in order if any(
            r.config.name == n for r in self.rows)]
        return all(a >= b for a, b in zip(values, values[1:]))

    def profile_gap_ok(self) -> bool:
        try:
            full = self.row("OS-1").recall_by_category.get("Preference", 0.0)
            bare = self.row("w/o PHR").recall_by_category.get("Preference", 0.0)
        except StopIteration:
            return True
        return full > bare

    def factor_trend_ok(self) -> bool:
        try:
            row = self.row("OS-1")
        except StopIteration:
            return True
        return row.late_hp_share >= row.day1_hp_share

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([
            "config", "recall", "recall_preference", "recall_habit",
            "recall_experience", "contradiction_rate",
            "share_realtime", "share_historical", "share_profile",
            "share_languagemodel", "day1_hp_share", "late_hp_share",
        ])
        for row in self.rows:
            writer.writerow([
                row.config.name,
                f"{row.recall:.4f}",
                f"{row.recall_by_category.get('Preference', 0.0):.4f}",
                f"{row.recall_by_category.get('Habit', 0.0):.4f}",
                f"{row.recall_by_category.get('Experience', 0.0):.4f}",
                f"{row.contradiction_rate:.4f}",
                f"{row.shares[FACTOR_REAL_TIME]:.4f}",
                f"{row.shares[FACTOR_HISTORICAL]:.4f}",
                f"{row.shares[FACTOR_PROFILE]:.4f}",
                f"{row.shares[FACTOR_LANGUAGE_MODEL]:.4f}",
                f"{row.day1_hp_share:.4f}",
                f"{row.late_hp_share:.4f}",
            ])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [
            "| config | recall | pref | habit | exp | contradiction | RT | Hist | Prof | LM |",
            "|---|---|---|---|---|---|---|---|---|---|",
        ]
        for row in self.rows:
            lines.append(
                "| {} | {:.3f} | {:.3f} | {:.3f} | {:.3f} | {:.3f} "
                "| {:.3f} | {:.3f} | {:.3f} | {:.3f} |".format(
                    row.config.name, row.recall,
                    row.recall_by_category.get("Preference", 0.0),
                    row.recall_by_category.get("Habit", 0.0),
                    row.recall_by_category.get("Experience", 0.0),
                    row.contradiction_rate,
                    row.shares[FACTOR_REAL_TIME],
                    row.shares[FACTOR_HISTORICAL],
                    row.shares[FACTOR_PROFILE],
                    row.shares[FACTOR_LANGUAGE_MODEL]))
        return "\n".join(lines) + "\n"


def _hp_share(traces: list[TurnTrace]) -> float:
    if not traces:
        return 0.0
    hp = sum(1 for t in traces
             if t.primary_factor in (FACTOR_HISTORICAL, FACTOR_PROFILE))
    return hp / len(traces)


def run_ablation(personas: list[Persona], days: int = 10, seed: int = 0,
                 configs: list[AblationConfig] | None = None,
                 sessions_per_day: int = 3, rounds: int = 3,
                 parallel: bool = True,
                 base_engine_config: EngineConfig | None = None) -> AblationReport:
    configs = configs if configs is not None else list(PRESETS.values())

    def one_run(persona: Persona, config: AblationConfig):
        schedule = generate_schedule(persona, days=days, seed=seed)
        result = simulate_dialogues(persona, schedule, config, days=days,
                                    sessions_per_day=sessions_per_day,
                                    rounds=rounds, seed=seed,
                                    base_engine_config=base_engine_config)
        outcomes = probe_grounding(result)
        return persona, config, result, outcomes

    jobs = [(p, c) for c in configs for p in personas]
    if parallel:
        with ThreadPoolExecutor(max_workers=8) as pool:
            runs = list(pool.map(lambda job: one_run(*job), jobs))
    else:
        runs = [one_run(*job) for job in jobs]

    rows: list[ConfigReport] = []
    snapshots: dict[tuple[str, str], bytes] = {}
    for config in configs:
        config_runs = [r for r in runs if r[1].name == config.name]
        outcomes = [o for _, _, _, run_outcomes in config_runs for o in run_outcomes]
        recalled = sum(1 for o in outcomes if o.recalled)
        contradicted = sum(1 for o in outcomes if o.contradicted)
        by_cat: dict[str, float] = {}
        for cat in FactCategory:
            cat_outcomes = [o for o in outcomes if o.category is cat]
            by_cat[cat.value] = (sum(1 for o in cat_outcomes if o.recalled)
                                 / len(cat_outcomes)) if cat_outcomes else 0.0
        all_traces = [t for _, _, result, _ in config_runs
                      for traces in result.traces_by_day.values() for t in traces]
        factor_counts = {f: 0 for f in FACTORS}
        for trace in all_traces:
            factor_counts[trace.primary_factor] += 1
        total_traces = max(1, len(all_traces))
        shares = {f: factor_counts[f] / total_traces for f in FACTORS}
        day1 = [t for _, _, result, _ in config_runs
                for t in result.traces_by_day.get(1, [])]
        late = [t for _, _, result, _ in config_runs
                for d, traces in result.traces_by_day.items() if d >= 6
                for t in traces]
        rows.append(ConfigReport(
            config=config,
            recall=recalled / max(1, len(outcomes)),
            recall_by_category=by_cat,
            contradiction_rate=contradicted / max(1, len(outcomes)),
            shares=shares,
            day1_hp_share=_hp_share(day1),
            late_hp_share=_hp_share(late),
        ))
        for persona, _, result, _ in config_runs:
            snapshots[(persona.name, config.name)] = result.snapshot_bytes()

    return AblationReport(rows=rows, snapshots=snapshots, seed=seed,
                          personas=len(personas), days=days)


def write_report(report: AblationReport, out_dir: str) -> tuple[str, str]:
    import os
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "report.csv")
    md_path = os.path.join(out_dir, "report.md")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report.to_csv())
    with open(md_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_markdown())
    return csv_path, md_path
