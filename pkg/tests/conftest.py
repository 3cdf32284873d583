from __future__ import annotations

import random

import pytest

from hostids.model import AccessEntry, AccessMatrix, OperationEvent
from hostids.signatures import EventPattern, Signature, StagePoset

TS = "2025-06-01T12:00:00Z"


def event(subject="alice", program="/bin/cat", op="read", object="/etc/motd", **kw) -> OperationEvent:
    kw.setdefault("ts", TS)
    kw.setdefault("level", 0)
    return OperationEvent(subject=subject, program=program, op=op, object=object, **kw)


def matrix(*rows: tuple[str, str, str, str]) -> AccessMatrix:
    return AccessMatrix(tuple(AccessEntry(*row) for row in rows))


def signature(id="sig", stage="recon", subject="*", program="*", op="*", object="*", threshold=None) -> Signature:
    return Signature(id, stage, EventPattern(subject, program, op, object), threshold)


def random_poset(rng: random.Random, max_stages: int = 8) -> StagePoset:
    """Random acyclic poset: edges only ever point from lower to higher index."""
    n = rng.randint(1, max_stages)
    stages = tuple(f"s{i}" for i in range(n))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.3:
                edges.append((stages[i], stages[j]))
    return StagePoset(stages, tuple(edges))


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
