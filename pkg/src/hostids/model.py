"""Domain vocabulary for the analysis engine.

Subjects act through programs on objects. One normalized audit record is an
OperationEvent; the security policy is an allow-list AccessMatrix of glob
patterns over (subject, program, operation, object) quadruples, default deny.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from typing import Iterable, Mapping

from .errors import EngineError


class PolicyParseError(EngineError):
    """A malformed policy document; carries the offending 1-based line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"policy line {line}: {message}")
        self.line = line


class EventParseError(EngineError):
    """A malformed event line rejected in strict mode."""

    def __init__(self, line: int, message: str):
        super().__init__(f"event line {line}: {message}")
        self.line = line


def _check_identifier(name: str, value: object) -> str:
    if not isinstance(value, str) or not value:
        raise ValueError(f"{name} must be a non-empty string")
    if "\n" in value or "\r" in value:
        # line-oriented formats depend on identifiers staying on one line
        raise ValueError(f"{name} must not contain newlines")
    return value


@lru_cache(maxsize=4096)
def _compile_glob(pattern: str) -> re.Pattern[str]:
    parts = []
    for ch in pattern:
        if ch == "*":
            parts.append(".*")
        elif ch == "?":
            parts.append(".")
        else:
            parts.append(re.escape(ch))
    return re.compile("".join(parts), re.DOTALL)


def glob_match(pattern: str, value: str) -> bool:
    """Anchored, case-sensitive glob match.

    `*` matches any run of characters (including none), `?` exactly one;
    everything else, brackets included, is literal.
    """
    return _compile_glob(pattern).fullmatch(value) is not None


@dataclass(frozen=True)
class AccessEntry:
    """One allow rule: four anchored glob patterns over the access quadruple."""

    subject_pat: str
    program_pat: str
    op_pat: str
    object_pat: str

    def __post_init__(self):
        for name, pat in zip(_ENTRY_FIELDS, self.patterns):
            if not isinstance(pat, str) or not pat:
                raise ValueError(f"{name} pattern must be non-empty")
            if "\n" in pat or "\r" in pat:
                raise ValueError(f"{name} pattern must not contain newlines")

    @property
    def patterns(self) -> tuple[str, str, str, str]:
        return (self.subject_pat, self.program_pat, self.op_pat, self.object_pat)

    def matches(self, subject: str, program: str, op: str, object: str) -> bool:
        return (
            glob_match(self.subject_pat, subject)
            and glob_match(self.program_pat, program)
            and glob_match(self.op_pat, op)
            and glob_match(self.object_pat, object)
        )


_ENTRY_FIELDS = ("subject", "program", "op", "object")


@dataclass(frozen=True)
class AccessMatrix:
    """Ordered allow-list; membership is existential, so order and duplicates
    carry no meaning beyond serialization."""

    entries: tuple[AccessEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def permits(self, subject: str, program: str, op: str, object: str) -> bool:
        """True iff at least one entry matches the whole quadruple."""
        return any(e.matches(subject, program, op, object) for e in self.entries)


def parse_timestamp(ts: object) -> datetime:
    """Validate an ISO-8601 instant; a trailing Z is accepted as UTC."""
    if not isinstance(ts, str) or not ts:
        raise ValueError("ts must be a non-empty ISO-8601 string")
    text = ts[:-1] + "+00:00" if ts.endswith("Z") else ts
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise ValueError(f"ts is not a valid ISO-8601 instant: {ts!r}") from None


@dataclass(frozen=True)
class OperationEvent:
    """One normalized audit record: subject used program to perform op on object.

    Timestamps are informational; machines consume events in file order.
    The (program, op, object) triple is the machine input symbol and the
    subject selects the session.
    """

    ts: str
    subject: str
    program: str
    object: str
    op: str
    level: int
    attrs: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        parse_timestamp(self.ts)
        for name in ("subject", "program", "object", "op"):
            _check_identifier(name, getattr(self, name))
        if isinstance(self.level, bool) or not isinstance(self.level, int) or self.level < 0:
            raise ValueError("level must be a non-negative integer")

    def triple(self) -> tuple[str, str, str]:
        return (self.program, self.op, self.object)


def _split_policy_fields(line: str, line_no: int) -> list[str]:
    """Split one policy line into fields.

    Fields are whitespace-separated; a double-quoted field may embed spaces;
    `#` at a field boundary starts a comment.
    """
    fields: list[str] = []
    i, n = 0, len(line)
    while i < n:
        ch = line[i]
        if ch in " \t":
            i += 1
            continue
        if ch == "#":
            break
        if ch == '"':
            j = line.find('"', i + 1)
            if j < 0:
                raise PolicyParseError(line_no, "unterminated double quote")
            fields.append(line[i + 1 : j])
            i = j + 1
            if i < n and line[i] not in " \t":
                raise PolicyParseError(line_no, "quoted field must be followed by whitespace")
        else:
            j = i
            while j < n and line[j] not in " \t":
                j += 1
            fields.append(line[i:j])
            i = j
    return fields


def parse_policy(document: str) -> AccessMatrix:
    """Parse the line-oriented policy format into an AccessMatrix.

    Each rule line reads `allow <subject> <program> <op> <object>` where the
    four fields are glob patterns. Blank lines are ignored and `#` starts a
    comment. Any malformed line rejects the whole document.
    """
    entries: list[AccessEntry] = []
    for line_no, raw in enumerate(document.splitlines(), start=1):
        fields = _split_policy_fields(raw, line_no)
        if not fields:
            continue
        if fields[0] != "allow":
            raise PolicyParseError(line_no, f"unknown rule keyword {fields[0]!r}")
        if len(fields) != 5:
            raise PolicyParseError(
                line_no,
                f"expected 4 pattern fields (subject program op object), got {len(fields) - 1}",
            )
        try:
            entries.append(AccessEntry(*fields[1:]))
        except ValueError as exc:
            raise PolicyParseError(line_no, str(exc)) from None
    return AccessMatrix(tuple(entries))


def _render_policy_field(pat: str) -> str:
    if '"' in pat:
        raise ValueError(f"pattern {pat!r} contains a double quote and cannot be serialized")
    if " " in pat or "\t" in pat or pat.startswith("#"):
        return f'"{pat}"'
    return pat


def serialize_policy(matrix: AccessMatrix) -> str:
    """Render a matrix back into the policy format (inverse of parse_policy)."""
    lines = [
        "allow " + " ".join(_render_policy_field(p) for p in entry.patterns)
        for entry in matrix.entries
    ]
    return "".join(line + "\n" for line in lines)


_EVENT_KEYS = ("ts", "subject", "program", "object", "op", "level")


def _reject_duplicate_keys(pairs: list[tuple[str, object]]) -> dict:
    obj: dict = {}
    for key, value in pairs:
        if key in obj:
            raise ValueError(f"duplicate field {key!r}")
        obj[key] = value
    return obj


def _event_from_obj(obj: dict) -> OperationEvent:
    missing = [k for k in _EVENT_KEYS if k not in obj]
    if missing:
        raise ValueError(f"missing required field(s): {', '.join(missing)}")
    attrs: dict[str, str] = {}
    declared = obj.get("attrs")
    if declared is not None:
        if not isinstance(declared, dict):
            raise ValueError("attrs must be a JSON object")
        for key, value in declared.items():
            if not isinstance(value, str):
                raise ValueError(f"attrs[{key!r}] must be a string")
            attrs[key] = value
    for key, value in obj.items():
        if key in _EVENT_KEYS or key == "attrs":
            continue
        # forward compatibility: unknown keys ride along as attrs
        attrs[key] = value if isinstance(value, str) else json.dumps(value, separators=(",", ":"))
    try:
        return OperationEvent(
            ts=obj["ts"],
            subject=obj["subject"],
            program=obj["program"],
            object=obj["object"],
            op=obj["op"],
            level=obj["level"],
            attrs=attrs,
        )
    except ValueError as exc:
        raise ValueError(str(exc)) from None


@dataclass
class EventStream:
    """Parsed event file: events in file order plus per-line diagnostics."""

    events: list[OperationEvent] = field(default_factory=list)
    lines: list[int] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)


def parse_event_stream(document: str, *, strict: bool = True) -> EventStream:
    """Parse newline-delimited JSON events.

    Strict mode fails on the first malformed line; lenient mode skips the
    line and records (line number, reason) instead.
    """
    stream = EventStream()
    for line_no, raw in enumerate(document.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw, object_pairs_hook=_reject_duplicate_keys)
            if not isinstance(obj, dict):
                raise ValueError("event line must be a JSON object")
            event = _event_from_obj(obj)
        except ValueError as exc:
            message = getattr(exc, "msg", None) or str(exc)
            if strict:
                raise EventParseError(line_no, message) from None
            stream.skipped.append((line_no, message))
            continue
        stream.events.append(event)
        stream.lines.append(line_no)
    return stream


def events_from_lines(lines: Iterable[str], **kwargs) -> EventStream:
    return parse_event_stream("\n".join(lines), **kwargs)
