"""Append-only message log and work counters for one protocol run."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator

from .matrix import Matrix

SHARING, COMPUTE, RECONSTRUCTION = "sharing", "compute", "reconstruction"


def source_id(g: int) -> str:
    return f"s{g}"


def worker_id(n: int) -> str:
    return f"w{n}"


MASTER_ID = "master"


def actor_kind(actor: str) -> str:
    if actor == MASTER_ID:
        return "master"
    return {"s": "source", "w": "worker"}[actor[0]]


def worker_index(actor: str) -> int | None:
    return int(actor[1:]) if actor.startswith("w") else None


@dataclass(frozen=True)
class TranscriptRecord:
    phase: str
    round: int
    sender: str
    receiver: str
    payload: Matrix
    local: bool = False

    @property
    def size(self) -> int:
        return self.payload.rows * self.payload.cols

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "round": self.round,
            "from": self.sender,
            "to": self.receiver,
            "local": self.local,
            "payload": self.payload.flat(),
        }


@dataclass
class TrafficCounters:
    """Field elements moved per link class, plus field multiplications per actor."""

    source_to_worker: int = 0
    worker_to_worker: int = 0
    worker_to_master: int = 0
    local: int = 0
    rounds: int = 0
    mults: Counter = field(default_factory=Counter)

    @property
    def total_elements(self) -> int:
        return self.source_to_worker + self.worker_to_worker + self.worker_to_master + self.local

    def to_dict(self) -> dict:
        return {
            "source_to_worker": self.source_to_worker,
            "worker_to_worker": self.worker_to_worker,
            "worker_to_master": self.worker_to_master,
            "local": self.local,
            "rounds": self.rounds,
            "mults": dict(sorted(self.mults.items())),
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrafficCounters):
            return NotImplemented
        return self.to_dict() == other.to_dict()


class RunTranscript:
    """Every payload exchanged during a run, in canonical (round, from, to) order.

    Rounds are numbered from 0 (sharing); each reshare procedure call takes the
    next round number, and the final upload to the master takes one more.
    """

    def __init__(self, meta: dict | None = None):
        self.meta = dict(meta or {})
        self.records: list[TranscriptRecord] = []
        self.mults: Counter = Counter()
        self._round = 0

    def next_round(self) -> int:
        self._round += 1
        return self._round

    @property
    def current_round(self) -> int:
        return self._round

    def send(self, phase: str, round_: int, sender: str, receiver: str, payload: Matrix) -> None:
        self.records.append(TranscriptRecord(phase, round_, sender, receiver, payload, sender == receiver))

    def count_mults(self, actor: str, n: int) -> None:
        self.mults[actor] += n

    def __iter__(self) -> Iterator[TranscriptRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def compute_rounds(self) -> int:
        return len({r.round for r in self.records if r.phase == COMPUTE})

    def counters(self) -> TrafficCounters:
        c = TrafficCounters(mults=Counter(self.mults), rounds=self.compute_rounds())
        for r in self.records:
            if r.local:
                c.local += r.size
                continue
            kinds = (actor_kind(r.sender), actor_kind(r.receiver))
            if kinds == ("source", "worker"):
                c.source_to_worker += r.size
            elif kinds == ("worker", "worker"):
                c.worker_to_worker += r.size
            elif kinds == ("worker", "master"):
                c.worker_to_master += r.size
            else:
                raise ValueError(f"unexpected link {r.sender} -> {r.receiver}")
        return c

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "records": [r.to_dict() for r in self.records],
            "mults": dict(sorted(self.mults.items())),
        }
