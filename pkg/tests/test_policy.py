from __future__ import annotations

import random

import pytest

from hostids.model import AccessMatrix
from hostids.policy import (
    MachineHalted,
    PolicyState,
    SubjectMismatch,
    Verdict,
    policy_run,
    policy_step,
    policy_verdict,
)

from .conftest import event, matrix

PERMIT_CAT = ("alice", "/bin/cat", "read", "/etc/motd")


def test_first_secure_step_records_triple():
    state, verdict = policy_step(PolicyState(), matrix(PERMIT_CAT), event())
    assert verdict is Verdict.SECURE
    assert state.performed == {("/bin/cat", "read", "/etc/motd")}
    assert not state.halted


def test_repeat_leaves_state_unchanged():
    m = matrix(PERMIT_CAT)
    state, _ = policy_step(PolicyState(), m, event())
    again, verdict = policy_step(state, m, event())
    assert verdict is Verdict.SECURE
    assert again == state


def test_empty_matrix_halts():
    state, verdict = policy_step(PolicyState(), AccessMatrix(), event())
    assert verdict is Verdict.UNSECURE
    assert state.halted
    assert state.performed == frozenset()


def test_halted_state_rejects_input():
    state, _ = policy_step(PolicyState(), AccessMatrix(), event())
    with pytest.raises(MachineHalted):
        policy_step(state, AccessMatrix(), event())


def test_subject_mismatch():
    m = matrix(PERMIT_CAT, ("bob", "/bin/cat", "read", "/etc/motd"))
    state, _ = policy_step(PolicyState(), m, event())
    with pytest.raises(SubjectMismatch):
        policy_step(state, m, event(subject="bob"))


def test_performed_triple_survives_matrix_shrink():
    # a revoked permission does not retroactively flag a repeat
    state, _ = policy_step(PolicyState(), matrix(PERMIT_CAT), event())
    verdict = policy_verdict(state, AccessMatrix(), event())
    assert verdict is Verdict.SECURE


def test_policy_run_empty():
    trace = policy_run(AccessMatrix(), [])
    assert trace.steps == []
    assert trace.final_state == PolicyState()


def test_policy_run_all_secure():
    m = matrix(("alice", "/bin/*", "read", "/home/alice/*"))
    events = [event(program="/bin/cat", object=f"/home/alice/f{i}") for i in range(3)]
    trace = policy_run(m, events)
    assert [v for _, v in trace.steps] == [Verdict.SECURE] * 3


def test_policy_run_halts_and_skips():
    # hand trace: permitted, forbidden, permitted -> Secure, UnSecure, skipped
    m = matrix(PERMIT_CAT)
    events = [event(), event(object="/etc/shadow"), event()]
    trace = policy_run(m, events)
    assert [v for _, v in trace.steps] == [Verdict.SECURE, Verdict.UNSECURE]
    assert len(trace.skipped) == 1
    assert trace.final_state.halted


def _random_trace(rng: random.Random):
    """A (matrix, events) pair over a tiny vocabulary."""
    programs = ["/bin/cat", "/bin/sh", "/usr/bin/ssh"]
    ops = ["read", "write", "exec"]
    objects = ["/etc/motd", "/etc/shadow", "/home/alice/x"]
    rows = []
    for _ in range(rng.randint(0, 5)):
        rows.append(
            (
                "alice",
                rng.choice(programs + ["*", "/bin/*"]),
                rng.choice(ops + ["*"]),
                rng.choice(objects + ["*", "/etc/*"]),
            )
        )
    events = [
        event(program=rng.choice(programs), op=rng.choice(ops), object=rng.choice(objects))
        for _ in range(rng.randint(1, 12))
    ]
    return matrix(*rows), events


def test_randomized_idempotence_and_prefix_closure():
    rng = random.Random(99)
    for _ in range(300):
        m, events = _random_trace(rng)
        state = PolicyState()
        for e in events:
            if state.halted:
                break
            before = state
            state, verdict = policy_step(state, m, e)
            if verdict is Verdict.SECURE:
                # idempotence: feeding the same event again changes nothing
                repeat_state, repeat_verdict = policy_step(state, m, e)
                assert repeat_verdict is Verdict.SECURE
                assert repeat_state == state
                # prefix closure: the new triple was judged Secure on entry
                assert policy_verdict(before, m, e) is Verdict.SECURE


def test_matrix_growth_never_introduces_unsecure():
    rng = random.Random(7)
    for _ in range(200):
        m, events = _random_trace(rng)
        trace = policy_run(m, events)
        if any(v is Verdict.UNSECURE for _, v in trace.steps):
            continue
        grown = matrix(*(tuple(e.patterns) for e in m.entries), ("alice", "*", "*", "*"))
        regrown = policy_run(grown, events)
        assert all(v is Verdict.SECURE for _, v in regrown.steps)
        assert len(regrown.steps) == len(trace.steps)
