"""V2I message schema, keyed authentication tags, and the simulated channel.

Canonical wire form (auth tags are computed over it, so it is bit-exact):
kind byte, then length-prefixed UTF-8 sender and recipient, u64 send tick,
then the length-prefixed canonical-JSON payload (sorted keys, compact
separators). The channel delivers per-link FIFO with seeded drop/jitter and
disconnect windows; its randomness comes from a dedicated counter stream so
the rest of the simulation is unaffected.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .rng import DetRng

TAG_SIZE = 16
KEY_SIZE = 32


class MsgKind(str, Enum):
    TRAJECTORY_UPDATE = "TrajectoryUpdate"
    EMERGENCY_STOP = "EmergencyStop"
    STATION_COMMAND = "StationCommand"
    VEHICLE_STATE_REPORT = "VehicleStateReport"
    ONBOARD_REQUEST = "OnboardRequest"
    ONBOARD_ACK = "OnboardAck"
    ESTOP_RELEASE = "EstopRelease"
    HAZARD_CLEAR = "HazardClear"


_KIND_CODE = {k: i for i, k in enumerate(MsgKind)}


def derive_key(seed: int, vehicle_id: str) -> bytes:
    return hashlib.blake2b(
        b"depot-auth-key" + struct.pack("<q", seed) + vehicle_id.encode("utf-8"),
        digest_size=KEY_SIZE,
    ).digest()


def canonical_payload(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass
class Message:
    kind: MsgKind
    sender: str
    recipient: str
    payload: dict
    sent_tick: int
    auth_tag: bytes = b""
    _payload_bytes: Optional[bytes] = field(default=None, repr=False, compare=False)

    def payload_bytes(self) -> bytes:
        if self._payload_bytes is None:
            self._payload_bytes = canonical_payload(self.payload)
        return self._payload_bytes

    def canonical_bytes(self) -> bytes:
        s = self.sender.encode("utf-8")
        r = self.recipient.encode("utf-8")
        p = self.payload_bytes()
        return b"".join(
            (
                struct.pack("<B", _KIND_CODE[self.kind]),
                struct.pack("<H", len(s)), s,
                struct.pack("<H", len(r)), r,
                struct.pack("<Q", self.sent_tick),
                struct.pack("<I", len(p)), p,
            )
        )

    def sign(self, key: bytes) -> "Message":
        self.auth_tag = hashlib.blake2b(self.canonical_bytes(), key=key, digest_size=TAG_SIZE).digest()
        return self

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "sender": self.sender,
            "recipient": self.recipient,
            "payload": self.payload,
            "sent_tick": self.sent_tick,
            "auth_tag": self.auth_tag.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Message":
        return cls(
            kind=MsgKind(d["kind"]),
            sender=d["sender"],
            recipient=d["recipient"],
            payload=d["payload"],
            sent_tick=d["sent_tick"],
            auth_tag=bytes.fromhex(d["auth_tag"]),
        )


def verify(msg: Message, key: bytes) -> bool:
    expected = hashlib.blake2b(msg.canonical_bytes(), key=key, digest_size=TAG_SIZE).digest()
    return expected == msg.auth_tag


@dataclass(frozen=True)
class LinkFaults:
    blocked: bool = False
    drop_probability: float = 0.0
    jitter_ticks: int = 0


class Channel:
    """Simulated V2I transport. One queue per (sender, recipient) link,
    deliveries strictly in send order (later sends never overtake)."""

    def __init__(self, seed: int, base_delay_ticks: int = 1,
                 drop_probability: float = 0.0, jitter_ticks: int = 0):
        self.base_delay = base_delay_ticks
        self.drop_probability = drop_probability
        self.jitter = jitter_ticks
        self.rng = DetRng(seed, "channel")
        self.queues: dict[tuple[str, str], list[list]] = {}
        self.last_sched: dict[tuple[str, str], int] = {}
        self.seq = 0

    def send(self, msg: Message, now: int, faults: LinkFaults = LinkFaults()) -> Optional[int]:
        """Returns the scheduled delivery tick, or None when dropped."""
        drop_draw = self.rng.random()
        jitter_span = max(self.jitter, faults.jitter_ticks)
        jitter_draw = self.rng.randint(0, jitter_span) if jitter_span > 0 else 0
        if faults.blocked:
            return None
        p_drop = max(self.drop_probability, faults.drop_probability)
        if p_drop > 0.0 and drop_draw < p_drop:
            return None
        link = (msg.sender, msg.recipient)
        when = now + self.base_delay + jitter_draw
        when = max(when, self.last_sched.get(link, -1))  # FIFO: never overtake
        self.last_sched[link] = when
        self.seq += 1
        self.queues.setdefault(link, []).append([when, self.seq, msg])
        return when

    def deliver_due(self, now: int) -> list[Message]:
        """All messages scheduled at or before `now`, per-link FIFO, links in
        lexicographic order for a deterministic global sequence."""
        out: list[tuple[tuple[str, str], int, Message]] = []
        for link in sorted(self.queues):
            q = self.queues[link]
            while q and q[0][0] <= now:
                when, seq, msg = q.pop(0)
                out.append((link, seq, msg))
        out.sort(key=lambda item: (item[1],))
        return [msg for _, _, msg in out]

    def pending_count(self) -> int:
        return sum(len(q) for q in self.queues.values())

    def to_dict(self) -> dict:
        return {
            "rng_counter": self.rng.state(),
            "seq": self.seq,
            "last_sched": [[s, r, t] for (s, r), t in sorted(self.last_sched.items())],
            "queues": [
                [s, r, [[when, seq, msg.to_dict()] for when, seq, msg in q]]
                for (s, r), q in sorted(self.queues.items())
            ],
        }

    def restore(self, d: dict) -> None:
        self.rng.restore(d["rng_counter"])
        self.seq = d["seq"]
        self.last_sched = {(s, r): t for s, r, t in d["last_sched"]}
        self.queues = {
            (s, r): [[when, seq, Message.from_dict(m)] for when, seq, m in q]
            for s, r, q in d["queues"]
        }
