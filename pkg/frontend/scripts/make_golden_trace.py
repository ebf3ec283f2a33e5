"""Regenerate fixtures/golden_trace.json from the engine.

Drives a deterministic 20-turn session: day 1 plants facts, day 2 asks
recall/preference questions, and the use_profile ablation toggle flips off
after turn 13 so later traces must contain zero Profiles hits.
"""

import json
import os
import sys

from companion.engine import EngineConfig, UserEngine
from companion.providers import reference_bundle

FLIP_AFTER_TURN = 13
DAY1 = [
    ("a desk with a laptop", "I am so busy"),
    ("a desk with a laptop", "I never drink coffee"),
    ("a desk with a laptop", "I always jog in the morning, I love it"),
    ("a park with trees and a wide lawn", "I visited the science museum today, it was amazing"),
    ("a park with trees and a wide lawn", "the weather is lovely today"),
    ("a park with trees and a wide lawn", "how is your day going?"),
]
DAY2 = [
    ("a commercial street with a coffee shop and a milk tea shop", "what should I drink?"),
    ("a commercial street with a coffee shop and a milk tea shop", "what do I usually do in the morning?"),
    ("a desk with a laptop", "do you remember when I visited the science museum?"),
    ("a desk with a laptop", "I am writing a paper"),
    ("a desk with a laptop", "what did I do recently?"),
    ("a park with trees and a wide lawn", "what should I drink?"),
    ("a park with trees and a wide lawn", "do you remember when I visited the science museum?"),
    ("a commercial street with a coffee shop and a milk tea shop", "what should I drink?"),
    ("a desk with a laptop", "what do I usually do in the morning?"),
    ("a desk with a laptop", "what did I do recently?"),
    ("a park with trees and a wide lawn", "do you remember when I visited the science museum?"),
    ("a commercial street with a coffee shop and a milk tea shop", "what should I drink?"),
    ("a desk with a laptop", "what do I usually do in the morning?"),
    ("a desk with a laptop", "how is your day going?"),
]


def main(out_path: str) -> None:
    engine = UserEngine("golden", reference_bundle(),
                        EngineConfig(half_life_s=5 * 24 * 3600.0))
    turns = []
    ts = 0.0
    for caption, text in DAY1:
        engine.ingest_frame(ts, caption=caption)
        trace = engine.respond(ts + 5.0, text)
        turns.append(trace)
        ts += 1800.0
    engine.rollover("1970-01-01", now=86000.0)
    ts = 86400.0
    for caption, text in DAY2:
        if len(turns) == FLIP_AFTER_TURN:
            engine.set_flags(use_profile=False)
        engine.ingest_frame(ts, caption=caption)
        trace = engine.respond(ts + 5.0, text)
        turns.append(trace)
        ts += 1800.0
    assert len(turns) == 20, len(turns)
    fixture = {
        "flip_after_turn": FLIP_AFTER_TURN,
        "turns": [
            {
                "event": {
                    "turn_id": t.turn_id,
                    "text": t.response,
                    "tags": t.tags,
                    "primary_factor": t.primary_factor,
                },
                "trace": t.to_json_dict(),
            }
            for t in turns
        ],
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(fixture, fh, indent=1, sort_keys=True)
    print(f"wrote {out_path}: {len(turns)} turns, "
          f"{sum(len(t.hits) for t in turns)} hits")


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "fixtures", "golden_trace.json")
    main(out)
