"""Attack-stage signature machine.

Signatures are event patterns tagged with an intrusion stage; the stages form
a partial order describing how attacks progress. The machine's state is the
most advanced stage reached so far (a synthetic bottom stage before anything
matched). A matched signature advances the state when its stage lies above
the current one, holds it when at-or-below, and flags out-of-sequence
progress when the two stages are incomparable. The state never regresses.

Some signatures only matter in bulk; those carry a sliding-window threshold
counted in events, not wall time: the match fires when the last `window`
events of the session include at least `count` hits of the same pattern.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EngineError
from .model import OperationEvent, glob_match

BOTTOM_STAGE = "⊥"


class SignatureDbError(EngineError):
    """The signature database file is malformed or internally inconsistent."""


class UnknownStage(EngineError):
    """A stage name was used that the database never declares."""


class UnknownSignatureId(EngineError):
    """A scenario step names a signature id that does not exist."""


@dataclass(frozen=True)
class StagePoset:
    """Partial order over declared stage names.

    Built from a stage list and precedence edges (earlier, later). The order
    is the reflexive-transitive closure of the edges; cycles are rejected
    because a stage cannot precede itself. The synthetic bottom stage lies
    below every declared stage and is never declared explicitly.
    """

    stages: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    _reach: dict[str, frozenset[str]] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        declared = set(self.stages)
        if len(declared) != len(self.stages):
            raise SignatureDbError("duplicate stage name")
        if BOTTOM_STAGE in declared:
            raise SignatureDbError(f"stage name {BOTTOM_STAGE!r} is reserved")
        succ: dict[str, set[str]] = {s: set() for s in self.stages}
        for a, b in self.edges:
            for name in (a, b):
                if name not in declared:
                    raise UnknownStage(f"edge references undeclared stage {name!r}")
            if a == b:
                raise SignatureDbError(f"self-edge on stage {a!r}")
            succ[a].add(b)
        # reach[s] = all stages at or above s, by DFS with cycle detection
        reach: dict[str, frozenset[str]] = {}
        visiting: set[str] = set()

        def above(s: str) -> frozenset[str]:
            if s in reach:
                return reach[s]
            if s in visiting:
                raise SignatureDbError("stage precedence edges form a cycle")
            visiting.add(s)
            acc = {s}
            for t in succ[s]:
                acc |= above(t)
            visiting.discard(s)
            reach[s] = frozenset(acc)
            return reach[s]

        for s in self.stages:
            above(s)
        object.__setattr__(self, "_reach", reach)

    def check_stage(self, name: str) -> str:
        if name != BOTTOM_STAGE and name not in self._reach:
            raise UnknownStage(f"unknown stage {name!r}")
        return name

    def leq(self, a: str, b: str) -> bool:
        """True when stage a precedes or equals stage b."""
        self.check_stage(a)
        self.check_stage(b)
        if a == BOTTOM_STAGE:
            return True
        if b == BOTTOM_STAGE:
            return False
        return b in self._reach[a]

    def comparable(self, a: str, b: str) -> bool:
        return self.leq(a, b) or self.leq(b, a)


@dataclass(frozen=True)
class EventPattern:
    """Four anchored globs matched against one event's quadruple."""

    subject: str = "*"
    program: str = "*"
    op: str = "*"
    object: str = "*"

    def matches(self, event: OperationEvent) -> bool:
        return (
            glob_match(self.subject, event.subject)
            and glob_match(self.program, event.program)
            and glob_match(self.op, event.op)
            and glob_match(self.object, event.object)
        )


@dataclass(frozen=True)
class Threshold:
    """Fire only when the last `window` events hold >= `count` pattern hits."""

    count: int
    window: int

    def __post_init__(self):
        if self.count < 1:
            raise SignatureDbError("threshold count must be >= 1")
        if self.window < self.count:
            raise SignatureDbError("threshold window must be >= count")


@dataclass(frozen=True)
class Signature:
    id: str
    stage: str
    match: EventPattern
    threshold: Threshold | None = None


@dataclass(frozen=True)
class Scenario:
    """A named expected progression: an ordered list of signature ids."""

    id: str
    steps: tuple[str, ...]

    def __post_init__(self):
        if not self.steps:
            raise SignatureDbError(f"scenario {self.id!r} has no steps")


@dataclass(frozen=True)
class SignatureDb:
    poset: StagePoset
    signatures: tuple[Signature, ...]
    scenarios: tuple[Scenario, ...] = ()

    def __post_init__(self):
        seen: set[str] = set()
        for sig in self.signatures:
            if sig.id in seen:
                raise SignatureDbError(f"duplicate signature id {sig.id!r}")
            seen.add(sig.id)
            self.poset.check_stage(sig.stage)
            if sig.stage == BOTTOM_STAGE:
                raise SignatureDbError("a signature cannot sit at the bottom stage")
        names = set()
        for sc in self.scenarios:
            if sc.id in names:
                raise SignatureDbError(f"duplicate scenario id {sc.id!r}")
            names.add(sc.id)

    def by_id(self, sig_id: str) -> Signature:
        for sig in self.signatures:
            if sig.id == sig_id:
                return sig
        raise UnknownSignatureId(f"unknown signature id {sig_id!r}")


def stage_partition(signatures: Sequence[Signature]) -> dict[str, int]:
    """Count signatures per stage; the counts must sum to the total."""
    counts: dict[str, int] = {}
    for sig in signatures:
        counts[sig.stage] = counts.get(sig.stage, 0) + 1
    assert sum(counts.values()) == len(signatures)
    return counts


@dataclass(frozen=True)
class ScenarioViolation:
    scenario_id: str
    kind: str  # duplicate-step | stage-order | too-long
    indices: tuple[int, ...]
    detail: str


def validate_scenario(
    poset: StagePoset, signatures: Sequence[Signature], scenario: Scenario
) -> list[ScenarioViolation]:
    """Check a scenario's well-formedness against the database.

    Steps must be pairwise distinct, stages must be monotone under the
    partial order across every index pair, and the scenario cannot be longer
    than the total number of signatures. Every offending index pair is
    reported.
    """
    violations: list[ScenarioViolation] = []
    by_id = {sig.id: sig for sig in signatures}
    for step in scenario.steps:
        if step not in by_id:
            raise UnknownSignatureId(f"scenario {scenario.id!r} names unknown signature {step!r}")
    for i in range(len(scenario.steps)):
        for j in range(i + 1, len(scenario.steps)):
            if scenario.steps[i] == scenario.steps[j]:
                violations.append(
                    ScenarioViolation(
                        scenario.id,
                        "duplicate-step",
                        (i, j),
                        f"signature {scenario.steps[i]!r} appears at steps {i} and {j}",
                    )
                )
            earlier = by_id[scenario.steps[i]].stage
            later = by_id[scenario.steps[j]].stage
            if not poset.leq(earlier, later):
                violations.append(
                    ScenarioViolation(
                        scenario.id,
                        "stage-order",
                        (i, j),
                        f"step {i} stage {earlier!r} does not precede step {j} stage {later!r}",
                    )
                )
    if len(scenario.steps) > len(signatures):
        violations.append(
            ScenarioViolation(
                scenario.id,
                "too-long",
                (),
                f"{len(scenario.steps)} steps but only {len(signatures)} signatures exist",
            )
        )
    return violations


def match_signature(
    signatures: Sequence[Signature],
    event: OperationEvent,
    recent: Sequence[OperationEvent],
) -> Signature | None:
    """First signature (database order) whose pattern accepts the event.

    `recent` is the session's event history up to and including this event,
    newest last; threshold signatures consult its tail. A threshold signature
    matches only when the last `window` events contain at least `count` hits
    of its pattern, the current event being one of them.
    """
    for sig in signatures:
        if not sig.match.matches(event):
            continue
        if sig.threshold is None:
            return sig
        tail = recent[-sig.threshold.window :]
        hits = sum(1 for e in tail if sig.match.matches(e))
        if hits >= sig.threshold.count:
            return sig
    return None


@dataclass(frozen=True)
class SigState:
    """Most advanced stage reached; starts at the synthetic bottom.

    `history` records the ids of signatures that advanced the stage, in
    order; `last_signature` is the one whose stage the machine currently
    sits at (None while still at bottom).
    """

    current: str = BOTTOM_STAGE
    last_signature: str | None = None
    history: tuple[str, ...] = ()


@dataclass(frozen=True)
class StageOutput:
    """Machine output for one matched signature."""

    stage: str
    out_of_sequence: bool = False


def sig_step(state: SigState, poset: StagePoset, sig: Signature) -> tuple[SigState, StageOutput]:
    """One signature-machine step.

    A signature at-or-below the current stage holds the state (no regress).
    One strictly above advances to its stage and is appended to the history.
    Incomparable stages hold the state and raise the out-of-sequence flag.
    """
    current = state.current
    incoming = poset.check_stage(sig.stage)
    if poset.leq(incoming, current):
        return state, StageOutput(current)
    if poset.leq(current, incoming):
        advanced = SigState(incoming, sig.id, state.history + (sig.id,))
        return advanced, StageOutput(incoming)
    return state, StageOutput(current, out_of_sequence=True)


def load_signature_db(document: str, *, check_scenarios: bool = True) -> SignatureDb:
    """Parse the JSON signature database.

    Layout: {"stages": [...], "edges": [[a, b], ...], "signatures": [...],
    "scenarios": [...]}, where each signature is {"id", "stage", "match":
    {subject?, program?, op?, object?}, "threshold"?: {"count", "window"}}
    and each scenario is {"id", "steps": [...]}.

    By default every scenario is checked for well-formedness and any
    violation rejects the whole file; `check_scenarios=False` defers that to
    the caller (the validate command reports violations one by one).
    """
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SignatureDbError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise SignatureDbError("database must be a JSON object")

    stages = obj.get("stages")
    if not isinstance(stages, list) or not all(isinstance(s, str) and s for s in stages):
        raise SignatureDbError("stages must be a list of non-empty strings")
    edges_raw = obj.get("edges", [])
    if not isinstance(edges_raw, list):
        raise SignatureDbError("edges must be a list of [earlier, later] pairs")
    edges: list[tuple[str, str]] = []
    for pair in edges_raw:
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(x, str) for x in pair)):
            raise SignatureDbError(f"bad edge {pair!r}; expected [earlier, later]")
        edges.append((pair[0], pair[1]))
    poset = StagePoset(tuple(stages), tuple(edges))

    sigs_raw = obj.get("signatures")
    if not isinstance(sigs_raw, list):
        raise SignatureDbError("signatures must be a list")
    signatures: list[Signature] = []
    for item in sigs_raw:
        if not isinstance(item, dict):
            raise SignatureDbError(f"bad signature entry {item!r}")
        sig_id = item.get("id")
        stage = item.get("stage")
        if not isinstance(sig_id, str) or not sig_id:
            raise SignatureDbError("signature id must be a non-empty string")
        if not isinstance(stage, str) or not stage:
            raise SignatureDbError(f"signature {sig_id!r}: stage must be a non-empty string")
        match_raw = item.get("match", {})
        if not isinstance(match_raw, dict):
            raise SignatureDbError(f"signature {sig_id!r}: match must be an object")
        unknown = set(match_raw) - {"subject", "program", "op", "object"}
        if unknown:
            raise SignatureDbError(f"signature {sig_id!r}: unknown match field(s) {sorted(unknown)}")
        for key, value in match_raw.items():
            if not isinstance(value, str) or not value:
                raise SignatureDbError(f"signature {sig_id!r}: match.{key} must be a non-empty string")
        threshold = None
        thr_raw = item.get("threshold")
        if thr_raw is not None:
            if not isinstance(thr_raw, dict):
                raise SignatureDbError(f"signature {sig_id!r}: threshold must be an object")
            count = thr_raw.get("count")
            window = thr_raw.get("window")
            for name, value in (("count", count), ("window", window)):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise SignatureDbError(f"signature {sig_id!r}: threshold.{name} must be an integer")
            threshold = Threshold(count, window)
        signatures.append(Signature(sig_id, stage, EventPattern(**match_raw), threshold))

    scenarios: list[Scenario] = []
    for item in obj.get("scenarios", []):
        if not isinstance(item, dict):
            raise SignatureDbError(f"bad scenario entry {item!r}")
        sc_id = item.get("id")
        steps = item.get("steps")
        if not isinstance(sc_id, str) or not sc_id:
            raise SignatureDbError("scenario id must be a non-empty string")
        if not isinstance(steps, list) or not all(isinstance(s, str) for s in steps):
            raise SignatureDbError(f"scenario {sc_id!r}: steps must be a list of signature ids")
        scenarios.append(Scenario(sc_id, tuple(steps)))

    try:
        db = SignatureDb(poset, tuple(signatures), tuple(scenarios))
    except UnknownStage as exc:
        raise SignatureDbError(str(exc)) from None
    if check_scenarios:
        problems: list[str] = []
        for sc in db.scenarios:
            for v in validate_scenario(db.poset, db.signatures, sc):
                problems.append(f"scenario {v.scenario_id!r}: {v.kind}: {v.detail}")
        if problems:
            raise SignatureDbError("; ".join(problems))
    else:
        for sc in db.scenarios:
            for step in sc.steps:
                db.by_id(step)  # raises UnknownSignatureId
    return db
