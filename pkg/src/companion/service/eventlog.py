"""Append-only JSONL event log.

Every state-changing input (user registration, envelopes, rollovers, config
changes) is appended as one JSON line and flushed immediately, so replaying
the log through the deterministic engine reconstructs the exact service
state after a crash. Traces are logged too, for inspection; they are
ignored on replay.
"""

from __future__ import annotations

import json
import os
import threading

LOG_SCHEMA_VERSION = 1


class EventLog:
    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        self._fh = open(path, "a", encoding="utf-8")

    def append(self, kind: str, payload: dict) -> None:
        line = json.dumps({"v": LOG_SCHEMA_VERSION, "kind": kind, **payload},
                          sort_keys=True)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self._lock:
            self._fh.close()

    @staticmethod
    def read_all(path: str) -> list[dict]:
        if not os.path.exists(path):
            return []
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    entries.append(json.loads(line))
                except json.JSONDecodeError:
                    break  # torn tail write from a crash; replay what is intact
        return entries
