"""Unified per-subject machine.

Couples the policy machine and the signature machine behind one step
function. Each incoming event is first classified: if any signature matches
it becomes a signature input (a signature hit is strictly more informative
than a policy pass), otherwise an operation input. Signature inputs drive
the stage tracker and leave the policy state alone; operation inputs drive
the policy machine and leave the stage tracker alone. A policy halt is
absorbing for the whole machine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

from .model import AccessMatrix, OperationEvent
from .policy import (
    MachineHalted,
    PolicyState,
    Verdict,
    policy_step,
    policy_verdict,
)
from .signatures import Signature, SigState, StagePoset, StageOutput, match_signature, sig_step


@dataclass(frozen=True)
class OpInput:
    event: OperationEvent


@dataclass(frozen=True)
class SigInput:
    signature: Signature
    event: OperationEvent


UnifiedInput = Union[OpInput, SigInput]

# a unified output is a policy verdict or a stage report
UnifiedOutput = Union[Verdict, StageOutput]


@dataclass(frozen=True)
class UnifiedState:
    policy: PolicyState = field(default_factory=PolicyState)
    sig: SigState = field(default_factory=SigState)

    @property
    def halted(self) -> bool:
        return self.policy.halted


def classify_input(
    event: OperationEvent,
    signatures: Sequence[Signature],
    recent: Sequence[OperationEvent],
) -> UnifiedInput:
    """Signature match takes precedence over plain operation handling."""
    sig = match_signature(signatures, event, recent)
    if sig is not None:
        return SigInput(sig, event)
    return OpInput(event)


def unified_step(
    state: UnifiedState,
    matrix: AccessMatrix,
    poset: StagePoset,
    input: UnifiedInput,
) -> tuple[UnifiedState, UnifiedOutput]:
    """One unified step; the two sub-machines never move together."""
    if state.halted:
        raise MachineHalted("unified machine is halted; no further input accepted")
    if isinstance(input, SigInput):
        sig_state, output = sig_step(state.sig, poset, input.signature)
        return UnifiedState(state.policy, sig_state), output
    policy_state, verdict = policy_step(state.policy, matrix, input.event)
    return UnifiedState(policy_state, state.sig), verdict


def input_trigger(input: UnifiedInput) -> str | tuple[str, str, str]:
    """What to blame in an alert: the signature id or the operation triple."""
    if isinstance(input, SigInput):
        return input.signature.id
    return input.event.triple()


@dataclass(frozen=True)
class UnifiedStepRecord:
    index: int
    output: UnifiedOutput
    trigger: str | tuple[str, str, str]
    post_halt: bool = False


@dataclass
class UnifiedRunResult:
    records: list[UnifiedStepRecord] = field(default_factory=list)
    skipped: int = 0
    final_state: UnifiedState = field(default_factory=UnifiedState)

    def outputs(self) -> list[tuple[int, UnifiedOutput]]:
        return [(r.index, r.output) for r in self.records]


class UnifiedSession:
    """One subject's machine plus the event history threshold matching needs.

    Halting mode drops events arriving after the halt. Non-halting mode
    keeps assessing for forensic listing: the policy state stays frozen at
    the halt, later operation inputs are judged against it without
    transitioning, the stage tracker keeps evolving, and every post-halt
    record is flagged.
    """

    def __init__(
        self,
        subject: str,
        matrix: AccessMatrix,
        poset: StagePoset,
        signatures: Sequence[Signature],
        *,
        halt: bool = True,
    ):
        self.subject = subject
        self.matrix = matrix
        self.poset = poset
        self.signatures = signatures
        self.halt = halt
        self.state = UnifiedState(PolicyState(subject=subject))
        self.history: list[OperationEvent] = []
        self.skipped = 0

    def feed(self, event: OperationEvent, index: int) -> UnifiedStepRecord | None:
        """Process one event; None means it was dropped after a halt."""
        if self.state.halted and self.halt:
            self.skipped += 1
            return None
        self.history.append(event)
        input = classify_input(event, self.signatures, self.history)
        if self.state.halted:
            # assessment only: judge without transitioning the policy part
            if isinstance(input, SigInput):
                sig_state, output = sig_step(self.state.sig, self.poset, input.signature)
                self.state = UnifiedState(self.state.policy, sig_state)
            else:
                output = policy_verdict(self.state.policy, self.matrix, event)
            return UnifiedStepRecord(index, output, input_trigger(input), post_halt=True)
        self.state, output = unified_step(self.state, self.matrix, self.poset, input)
        return UnifiedStepRecord(index, output, input_trigger(input))


def unified_run(
    matrix: AccessMatrix,
    poset: StagePoset,
    signatures: Sequence[Signature],
    events: Sequence[OperationEvent],
    *,
    halt: bool = True,
) -> UnifiedRunResult:
    """Replay one subject's events through a fresh unified machine."""
    result = UnifiedRunResult()
    session: UnifiedSession | None = None
    for index, event in enumerate(events):
        if session is None:
            session = UnifiedSession(event.subject, matrix, poset, signatures, halt=halt)
        record = session.feed(event, index)
        if record is not None:
            result.records.append(record)
    if session is not None:
        result.skipped = session.skipped
        result.final_state = session.state
    return result
