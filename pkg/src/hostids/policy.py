"""Policy machine: a state machine over operation events.

State is the set of (program, op, object) triples already performed and
judged Secure. An incoming triple is Secure when it is already in the state
or the access matrix permits it; otherwise UnSecure. Secure triples are added
to the state, so a repeated operation stays Secure even if the matrix entry
that first allowed it is later removed from a reloaded policy. The first
UnSecure verdict halts the session: the state is frozen and further input
raises unless the caller explicitly continues in an assessment-only mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import EngineError
from .model import AccessMatrix, OperationEvent


class Verdict(str, Enum):
    SECURE = "Secure"
    UNSECURE = "UnSecure"

    def __str__(self) -> str:  # report-friendly
        return self.value


class MachineHalted(EngineError):
    """Input was fed to a policy machine already halted by an UnSecure verdict."""


class SubjectMismatch(EngineError):
    """An event reached a per-subject machine bound to a different subject."""


@dataclass(frozen=True)
class PolicyState:
    """Immutable machine state: performed-triple set plus the halt flag.

    The subject binds on the first step (None until then); later events for
    a different subject are a routing bug surfaced as SubjectMismatch.
    """

    subject: str | None = None
    performed: frozenset[tuple[str, str, str]] = frozenset()
    halted: bool = False


def policy_verdict(state: PolicyState, matrix: AccessMatrix, event: OperationEvent) -> Verdict:
    """Output function alone: judge the event without transitioning."""
    triple = event.triple()
    if triple in state.performed or matrix.permits(event.subject, *triple):
        return Verdict.SECURE
    return Verdict.UNSECURE


def policy_step(
    state: PolicyState, matrix: AccessMatrix, event: OperationEvent
) -> tuple[PolicyState, Verdict]:
    """One machine step: verdict plus successor state.

    A Secure verdict adds the triple to the performed set; an UnSecure
    verdict freezes the state and sets the halt flag.
    """
    if state.halted:
        raise MachineHalted("policy machine is halted; no further input accepted")
    if state.subject is not None and event.subject != state.subject:
        raise SubjectMismatch(
            f"event subject {event.subject!r} fed to machine for {state.subject!r}"
        )
    verdict = policy_verdict(state, matrix, event)
    if verdict is Verdict.UNSECURE:
        return PolicyState(event.subject, state.performed, halted=True), verdict
    return PolicyState(event.subject, state.performed | {event.triple()}, halted=False), verdict


@dataclass
class PolicyTrace:
    """Result of replaying a list of events through one policy machine."""

    steps: list[tuple[OperationEvent, Verdict]] = field(default_factory=list)
    skipped: list[OperationEvent] = field(default_factory=list)
    final_state: PolicyState = field(default_factory=PolicyState)


def policy_run(matrix: AccessMatrix, events: list[OperationEvent]) -> PolicyTrace:
    """Replay events through a fresh machine, halting at the first UnSecure.

    Events arriving after the halt are collected as skipped rather than
    judged, mirroring a monitor that stops the session on violation.
    """
    trace = PolicyTrace()
    state = PolicyState()
    for event in events:
        if state.halted:
            trace.skipped.append(event)
            continue
        state, verdict = policy_step(state, matrix, event)
        trace.steps.append((event, verdict))
    trace.final_state = state
    return trace
