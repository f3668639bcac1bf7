"""Append-only trace log with a chained 64-bit digest.

Every simulation event is one record {"t": tick, "k": kind, ...}. The terminal
hash is a pure function of the record sequence, so two runs are behaviorally
identical iff their hashes match, and a run resumed from a snapshot can carry
the chain state forward and still end on the uninterrupted run's hash.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Iterable

GENESIS = b"\x00" * 8


def canonical_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class TraceLog:
    def __init__(self, chain: bytes = GENESIS, count: int = 0):
        self.records: list[dict] = []
        self._chain = chain
        self._count = count

    def append(self, tick: int, record_kind: str, **payload: Any) -> None:
        record = {"t": tick, "k": record_kind}
        record.update(payload)
        self.records.append(record)
        line = canonical_record(record).encode("utf-8")
        self._chain = hashlib.blake2b(self._chain + line, digest_size=8).digest()
        self._count += 1

    @property
    def terminal_hash(self) -> str:
        return self._chain.hex()

    @property
    def count(self) -> int:
        return self._count

    def chain_state(self) -> dict:
        return {"chain": self._chain.hex(), "count": self._count}

    @classmethod
    def from_chain_state(cls, state: dict) -> "TraceLog":
        return cls(chain=bytes.fromhex(state["chain"]), count=state["count"])

    def write_ndjson(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.records:
                fh.write(canonical_record(record))
                fh.write("\n")

    def iter_kind(self, kind: str) -> Iterable[dict]:
        return (r for r in self.records if r["k"] == kind)


def read_ndjson(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def hash_records(records: list[dict]) -> str:
    """Recompute the terminal hash of a full record sequence (replay verification)."""
    chain = GENESIS
    for record in records:
        line = canonical_record(record).encode("utf-8")
        chain = hashlib.blake2b(chain + line, digest_size=8).digest()
    return chain.hex()
