"""Event-sourced persistence: an append-only NDJSON command log.

Every mutating request becomes one EventRecord; applying the records in
order onto a fresh Platform reconstructs the exact service state. Records
carry a chained digest over (previous digest, record content, state after
apply), so any hand-edit of a logged command is detected at its exact
sequence number during verification.

A truncated final line (torn write from a crash) is recovered by dropping
it; corruption anywhere before the tail refuses to load (CORRUPT_LOG).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Optional

from . import errors
from .errors import PanvasError
from .config import ServiceConfig
from .core import Platform


@dataclass(frozen=True)
class EventRecord:
    sequence: int
    kind: str
    payload: dict
    occurred_at: int
    digest: str = ""

    def body(self) -> str:
        return json.dumps({
            "sequence": self.sequence,
            "kind": self.kind,
            "payload": self.payload,
            "occurred_at": self.occurred_at,
        }, sort_keys=True, separators=(",", ":"))

    def to_line(self) -> str:
        return json.dumps({
            "sequence": self.sequence,
            "kind": self.kind,
            "payload": self.payload,
            "occurred_at": self.occurred_at,
            "digest": self.digest,
        }, sort_keys=True, separators=(",", ":"))


def chain_digest(prev_digest: str, body: str, state_digest: str) -> str:
    h = hashlib.sha256()
    h.update(prev_digest.encode())
    h.update(body.encode())
    h.update(state_digest.encode())
    return h.hexdigest()[:32]


def read_log(path: str | Path) -> tuple[list[EventRecord], bool]:
    """Read a log file. Returns (records, tail_dropped). A malformed or
    incomplete final line is dropped (crash recovery); anything malformed
    earlier, or a sequence gap, raises CORRUPT_LOG naming the last valid
    sequence."""
    records: list[EventRecord] = []
    tail_dropped = False
    raw_lines = Path(path).read_text(encoding="utf-8").splitlines()
    total = len(raw_lines)
    for i, line in enumerate(raw_lines):
        if not line.strip():
            continue
        last_seq = records[-1].sequence if records else 0
        try:
            data = json.loads(line)
            record = EventRecord(
                int(data["sequence"]), str(data["kind"]), dict(data["payload"]),
                int(data["occurred_at"]), str(data.get("digest", "")),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            if i == total - 1:
                tail_dropped = True
                break
            raise PanvasError(
                errors.CORRUPT_LOG,
                f"malformed record at line {i + 1}; last valid sequence {last_seq}",
            )
        if record.sequence != last_seq + 1:
            raise PanvasError(
                errors.CORRUPT_LOG,
                f"sequence gap at line {i + 1}: got {record.sequence}, "
                f"last valid sequence {last_seq}",
            )
        records.append(record)
    return records, tail_dropped


def replay(records: list[EventRecord], config: Optional[ServiceConfig] = None) -> Platform:
    """Rebuild platform state from a command log. Logged commands that failed
    (and were acknowledged as errors) fail identically here, so the rebuilt
    state is bit-exact."""
    platform = Platform(config)
    for record in records:
        try:
            platform.apply(record.kind, record.payload, record.occurred_at)
        except PanvasError:
            pass
    return platform


class Store:
    """Single appender in front of a Platform: one total order of commands,
    optional on-disk log, idempotency-key dedup with cached responses."""

    def __init__(self, config: Optional[ServiceConfig] = None, log_path: Optional[str | Path] = None):
        self.config = config or ServiceConfig()
        self.log_path = Path(log_path) if log_path else None
        self.platform = Platform(self.config)
        self.records: list[EventRecord] = []
        self.sequence = 0
        self.last_digest = ""
        self._idempotency: dict[str, tuple[bool, dict]] = {}
        self._log_file: Optional[IO[str]] = None
        self.recovered_tail = False
        if self.log_path is not None and self.log_path.exists():
            existing, self.recovered_tail = read_log(self.log_path)
            for record in existing:
                try:
                    self.platform.apply(record.kind, record.payload, record.occurred_at)
                except PanvasError:
                    pass
                self.records.append(record)
                self.sequence = record.sequence
                self.last_digest = record.digest
            if self.recovered_tail:
                # Drop the torn tail on disk so future appends extend a clean log.
                with open(self.log_path, "w", encoding="utf-8") as fh:
                    for record in self.records:
                        fh.write(record.to_line() + "\n")
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_file = open(self.log_path, "a", encoding="utf-8")

    def close(self) -> None:
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None

    def _next_occurred_at(self, kind: str, payload: dict) -> int:
        if kind == "tick":
            return self.platform.now + int(payload.get("by", 1))
        if self.config.clock_mode == "wall":
            import time
            return max(self.platform.now, int(time.time()))
        return self.platform.now

    def execute(self, kind: str, payload: dict, idempotency_key: Optional[str] = None) -> dict:
        """Append the command, apply it, acknowledge. Domain failures are
        acknowledged as errors but stay in the log: a logged command fails
        identically on replay, keeping rebuilt state exact."""
        if idempotency_key:
            cached = self._idempotency.get(idempotency_key)
            if cached is not None:
                ok, response = cached
                if ok:
                    return response
                raise PanvasError(response["code"], response["message"])
        record = EventRecord(
            self.sequence + 1, kind, payload, self._next_occurred_at(kind, payload))
        failure: Optional[PanvasError] = None
        try:
            result = self.platform.apply(kind, payload, record.occurred_at)
        except PanvasError as exc:
            failure = exc
            result = {"code": exc.code, "message": exc.message}
        digest = chain_digest(self.last_digest, record.body(), self.platform.state_digest())
        record = EventRecord(record.sequence, record.kind, record.payload, record.occurred_at, digest)
        self.records.append(record)
        self.sequence = record.sequence
        self.last_digest = digest
        if self._log_file is not None:
            self._log_file.write(record.to_line() + "\n")
            self._log_file.flush()
        if idempotency_key:
            self._idempotency[idempotency_key] = (failure is None, result)
        if failure is not None:
            raise failure
        return result


def verify_records(
    records: list[EventRecord],
    config: Optional[ServiceConfig] = None,
    check_every_event: bool = True,
) -> dict:
    """Offline verification: replay the log, re-check the digest chain and
    every economy invariant. Reports the first failing sequence per check.

    The per-record digest commits to the balance state after each event, so
    a hand-edited amount anywhere in the log surfaces as a conservation
    failure at that exact sequence number."""
    platform = Platform(config)
    checklist: dict[str, Optional[str]] = {
        "conservation": None,
        "settlement_exactness": None,
        "market_exactness": None,
        "bounty_money_safety": None,
        "mint_statement_match": None,
    }
    prev_digest = ""
    for record in records:
        try:
            platform.apply(record.kind, record.payload, record.occurred_at)
        except PanvasError:
            pass
        if record.digest:
            expected = chain_digest(prev_digest, record.body(), platform.state_digest())
            if expected != record.digest and checklist["conservation"] is None:
                checklist["conservation"] = (
                    f"at sequence {record.sequence}: balances after replay do not match "
                    f"the recorded state digest (log tampered or reordered)"
                )
        prev_digest = record.digest
        if check_every_event:
            problem = platform.ledger.check_conservation()
            if problem is not None and checklist["conservation"] is None:
                checklist["conservation"] = f"at sequence {record.sequence}: {problem}"
    for name, problem in platform.check_invariants().items():
        if problem is not None and checklist.get(name) is None:
            checklist[name] = problem
    passed = all(v is None for v in checklist.values())
    return {
        "events": len(records),
        "passed": passed,
        "checks": {k: ("pass" if v is None else v) for k, v in checklist.items()},
    }
