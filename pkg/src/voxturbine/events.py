"""Append-only JSON-lines event logs.

Each record is one line: ``{"seq": n, "kind": str, "payload": {...}}`` with an
optional ``"ts"`` field. Engine-originated records carry no timestamp so that
replaying a seeded campaign reproduces the log byte for byte; the HTTP service
stamps its envelope because operators care about wall-clock history there.

Durable mode fsyncs after every append: a record is on disk before the caller
acts on it (write-ahead ordering for measurement submissions).
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Optional

ENGINE_EVENT_KINDS = (
    "campaign_created",
    "individual_evaluated",
    "generation_advanced",
    "model_retrained",
    "campaign_finished",
)
SERVICE_EVENT_KINDS = ("evaluation_requested", "measurement_resolved")


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def encode_record(record: dict) -> bytes:
    return (json.dumps(record, separators=(",", ":"), sort_keys=True) + "\n").encode()


class EventLog:
    """Sequential writer for one campaign's event file."""

    def __init__(self, path: Path | str, *, timestamps: bool = True, durable: bool = True) -> None:
        self.path = Path(path)
        self.timestamps = timestamps
        self.durable = durable
        self._seq = 0
        for record in read_events(self.path):
            self._seq = max(self._seq, int(record.get("seq", 0)))
        self._handle = open(self.path, "ab")

    @property
    def last_seq(self) -> int:
        return self._seq

    def append(self, kind: str, payload: dict) -> dict:
        self._seq += 1
        record: dict = {"seq": self._seq, "kind": kind, "payload": payload}
        if self.timestamps:
            record["ts"] = _utc_now_iso()
        self._handle.write(encode_record(record))
        self._handle.flush()
        if self.durable:
            os.fsync(self._handle.fileno())
        return record

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.flush()
            if self.durable:
                os.fsync(self._handle.fileno())
            self._handle.close()

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def iter_events(path: Path | str) -> Iterator[dict]:
    """Yield records from a log, tolerating one torn trailing line."""
    path = Path(path)
    if not path.exists():
        return
    with open(path, "rb") as handle:
        lines = handle.read().splitlines()
    for index, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError:
            if index == len(lines) - 1:
                return  # interrupted final write; everything before it is intact
            raise


def read_events(path: Path | str) -> list[dict]:
    return list(iter_events(path))


def last_event(path: Path | str, kind: Optional[str] = None) -> Optional[dict]:
    found = None
    for record in iter_events(path):
        if kind is None or record.get("kind") == kind:
            found = record
    return found
