"""Simulation bench: scripted personas, protocol runs, ablation reports."""

from .personas import (
    FactCategory,
    Persona,
    PlantedFact,
    Probe,
    SceneTuple,
    SCENE_POOLS,
    build_personas,
)
from .sim import (
    PRESETS,
    AblationConfig,
    AblationReport,
    ProbeOutcome,
    SimResult,
    generate_schedule,
    probe_grounding,
    run_ablation,
    simulate_dialogues,
    write_report,
)

__all__ = [
    "FactCategory",
    "Persona",
    "PlantedFact",
    "Probe",
    "SceneTuple",
    "SCENE_POOLS",
    "build_personas",
    "PRESETS",
    "AblationConfig",
    "AblationReport",
    "ProbeOutcome",
    "SimResult",
    "generate_schedule",
    "probe_grounding",
    "run_ablation",
    "simulate_dialogues",
    "write_report",
]
