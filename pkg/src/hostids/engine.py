"""Operational core behind the CLI.

Loads and cross-validates a configuration bundle (policy, signature
database, normalization maps, model descriptors), then replays event files
through per-subject unified machines and emits an alert stream plus a
summary. Everything here is deterministic: identical inputs produce
byte-identical alert lines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .acquisition import (
    EmptyModelSet,
    Level,
    ModelDescriptor,
    NormalizationMap,
    load_model_descriptors,
    load_normalization_map,
    level_label,
    normalize_event,
    validity_check,
)
from .errors import EngineError
from .model import (
    AccessMatrix,
    EventParseError,
    OperationEvent,
    parse_event_stream,
    parse_policy,
)
from .policy import Verdict
from .signatures import SignatureDb, load_signature_db, validate_scenario
from .unified import StageOutput, UnifiedOutput, UnifiedSession, UnifiedStepRecord


class ConfigError(EngineError):
    """The engine configuration file is malformed."""


@dataclass
class EngineOptions:
    """Behavior toggles; config file settings, CLI flags may switch them on."""

    lenient: bool = False
    no_halt: bool = False
    verbose: bool = False
    report_dir: str | None = None
    level_labels: dict[int, str] = field(default_factory=dict)


@dataclass
class EngineConfig:
    """Resolved file paths plus options; paths are absolute."""

    policy_path: Path
    signatures_path: Path
    map_paths: list[Path]
    models_path: Path | None
    options: EngineOptions


_OPTION_KEYS = {"lenient", "no_halt", "verbose", "report_dir", "levels"}
_CONFIG_KEYS = {"policy", "signatures", "maps", "models", "options"}


def _parse_options(obj: dict) -> EngineOptions:
    unknown = set(obj) - _OPTION_KEYS
    if unknown:
        raise ConfigError(f"unknown option key {sorted(unknown)[0]!r}")
    options = EngineOptions()
    for name in ("lenient", "no_halt", "verbose"):
        value = obj.get(name, False)
        if not isinstance(value, bool):
            raise ConfigError(f"option {name!r} must be a boolean")
        setattr(options, name, value)
    report_dir = obj.get("report_dir")
    if report_dir is not None and not isinstance(report_dir, str):
        raise ConfigError("option 'report_dir' must be a string path")
    options.report_dir = report_dir
    labels = obj.get("levels", {})
    if not isinstance(labels, dict):
        raise ConfigError("option 'levels' must map rank to label")
    for rank, label in labels.items():
        if not isinstance(label, str) or not label:
            raise ConfigError(f"level label for {rank!r} must be a non-empty string")
        try:
            options.level_labels[int(rank)] = label
        except ValueError:
            raise ConfigError(f"level rank {rank!r} is not an integer") from None
    return options


def load_config(path: str | Path) -> EngineConfig:
    """Read the config file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    base = path.parent

    def resolve(name: str, required: bool) -> Path | None:
        value = obj.get(name)
        if value is None:
            if required:
                raise ConfigError(f"config is missing required key {name!r}")
            return None
        if not isinstance(value, str) or not value:
            raise ConfigError(f"config key {name!r} must be a path string")
        return base / value

    maps_raw = obj.get("maps", [])
    if not isinstance(maps_raw, list) or not all(isinstance(m, str) and m for m in maps_raw):
        raise ConfigError("config key 'maps' must be a list of path strings")
    options_raw = obj.get("options", {})
    if not isinstance(options_raw, dict):
        raise ConfigError("config key 'options' must be an object")
    return EngineConfig(
        policy_path=resolve("policy", required=True),
        signatures_path=resolve("signatures", required=True),
        map_paths=[base / m for m in maps_raw],
        models_path=resolve("models", required=False),
        options=_parse_options(options_raw),
    )


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: {self.detail}"


@dataclass
class Bundle:
    """Everything a replay needs, loaded and cross-validated."""

    matrix: AccessMatrix
    db: SignatureDb
    maps: dict[int, NormalizationMap]
    models: list[ModelDescriptor] | None
    options: EngineOptions


def _read(path: Path, what: str) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise EngineError(f"cannot read {what} {path}: {exc}") from None


def load_bundle(config: EngineConfig) -> tuple[Bundle | None, list[CheckResult]]:
    """Load every referenced file and run all cross-checks.

    Returns the bundle only when every check passed; the check list always
    covers everything that could be verified.
    """
    checks: list[CheckResult] = []
    ok = True

    matrix = None
    try:
        matrix = parse_policy(_read(config.policy_path, "policy"))
        checks.append(CheckResult("policy", True, f"{len(matrix.entries)} rules"))
    except EngineError as exc:
        checks.append(CheckResult("policy", False, str(exc)))
        ok = False

    db = None
    try:
        db = load_signature_db(_read(config.signatures_path, "signature database"), check_scenarios=False)
        checks.append(
            CheckResult(
                "signatures",
                True,
                f"{len(db.signatures)} signatures, {len(db.poset.stages)} stages, "
                f"{len(db.scenarios)} scenarios",
            )
        )
    except EngineError as exc:
        checks.append(CheckResult("signatures", False, str(exc)))
        ok = False

    if db is not None:
        for scenario in db.scenarios:
            violations = validate_scenario(db.poset, db.signatures, scenario)
            if violations:
                ok = False
                detail = "; ".join(
                    f"{v.kind} at {v.indices}: {v.detail}" if v.indices else f"{v.kind}: {v.detail}"
                    for v in violations
                )
                checks.append(CheckResult(f"scenario {scenario.id}", False, detail))
            else:
                checks.append(
                    CheckResult(f"scenario {scenario.id}", True, f"{len(scenario.steps)} steps")
                )

    maps: dict[int, NormalizationMap] = {}
    for path in config.map_paths:
        try:
            nmap = load_normalization_map(_read(path, "normalization map"))
            if nmap.level in maps:
                raise ConfigError(f"two maps claim level {nmap.level}")
            maps[nmap.level] = nmap
            checks.append(
                CheckResult(
                    f"map {path.name}",
                    True,
                    f"level {nmap.level}, {len(nmap.op_map)} ops, {len(nmap.prog_map)} programs",
                )
            )
        except EngineError as exc:
            checks.append(CheckResult(f"map {path.name}", False, str(exc)))
            ok = False

    models = None
    if config.models_path is not None:
        try:
            models = load_model_descriptors(_read(config.models_path, "model descriptors"))
            checks.append(CheckResult("models", True, f"{len(models)} descriptors"))
        except EngineError as exc:
            checks.append(CheckResult("models", False, str(exc)))
            ok = False

    if models is not None:
        labels = config.options.level_labels or None
        for rank in sorted(maps):
            name = f"validity level {rank}"
            try:
                offenders = validity_check(Level(rank, level_label(rank, labels)), models)
            except EmptyModelSet as exc:
                checks.append(CheckResult(name, False, str(exc)))
                ok = False
                continue
            if offenders:
                parts = []
                for mid in offenders:
                    mmin = min(m.min_level for m in models if m.id == mid)
                    parts.append(
                        f"model {mid!r} needs level {mmin} data but acquisition is at "
                        f"level {rank} ({rank} > {mmin})"
                    )
                checks.append(CheckResult(name, False, "; ".join(parts)))
                ok = False
            else:
                checks.append(CheckResult(name, True, "acquisition at least as fine as every model"))

    if not ok or matrix is None or db is None:
        return None, checks
    return Bundle(matrix, db, maps, models, config.options), checks


@dataclass(frozen=True)
class Alert:
    """One emitted judgment, serialized as a single JSON line."""

    event_index: int
    ts: str
    subject: str
    output: UnifiedOutput
    trigger: str | tuple[str, str, str]
    post_halt: bool

    def to_obj(self) -> dict:
        if isinstance(self.output, StageOutput):
            output: object = {
                "stage": self.output.stage,
                "out_of_sequence": self.output.out_of_sequence,
            }
        else:
            output = self.output.value
        trigger: object = self.trigger if isinstance(self.trigger, str) else list(self.trigger)
        # insertion order fixes the serialized field order
        return {
            "event_index": self.event_index,
            "ts": self.ts,
            "subject": self.subject,
            "output": output,
            "trigger": trigger,
            "post_halt": self.post_halt,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_obj(), separators=(", ", ": "), ensure_ascii=False)


SUMMARY_KEYS = ("secure", "unsecure", "stage-alerts", "subjects", "skipped-lines")


@dataclass
class ReplayResult:
    alerts: list[Alert] = field(default_factory=list)
    records: list[Alert] = field(default_factory=list)  # full stream, verbose view
    summary: dict[str, int] = field(default_factory=lambda: {k: 0 for k in SUMMARY_KEYS})
    diagnostics: list[str] = field(default_factory=list)
    exit_code: int = 0


class SessionManager:
    """Routes events to one UnifiedSession per subject."""

    def __init__(self, bundle: Bundle, *, halt: bool = True):
        self.bundle = bundle
        self.halt = halt
        self.sessions: dict[str, UnifiedSession] = {}

    def feed(self, event: OperationEvent, index: int) -> UnifiedStepRecord | None:
        session = self.sessions.get(event.subject)
        if session is None:
            session = UnifiedSession(
                event.subject,
                self.bundle.matrix,
                self.bundle.db.poset,
                self.bundle.db.signatures,
                halt=self.halt,
            )
            self.sessions[event.subject] = session
        return session.feed(event, index)


def replay(bundle: Bundle, events_document: str) -> ReplayResult:
    """Run the full pipeline: parse, normalize, route, step, collect alerts.

    Strict mode propagates the first ingest or normalization failure as an
    EngineError (the caller maps it to exit code 1); lenient mode skips the
    offending line and counts it. Alerts cover Stage and UnSecure outputs;
    the record stream additionally keeps Secure outputs for verbose display.
    """
    options = bundle.options
    result = ReplayResult()
    stream = parse_event_stream(events_document, strict=not options.lenient)
    for line_no, reason in stream.skipped:
        result.diagnostics.append(f"skipped line {line_no}: {reason}")
    manager = SessionManager(bundle, halt=not options.no_halt)
    index = 0
    for event, line_no in zip(stream.events, stream.lines):
        if bundle.maps:
            nmap = bundle.maps.get(event.level)
            if nmap is None:
                message = f"no normalization map for level {event.level}"
                if not options.lenient:
                    raise EventParseError(line_no, message)
                result.diagnostics.append(f"skipped line {line_no}: {message}")
                stream.skipped.append((line_no, message))
                continue
            try:
                event = normalize_event(nmap, event)
            except EngineError as exc:
                if not options.lenient:
                    raise EventParseError(line_no, str(exc)) from None
                result.diagnostics.append(f"skipped line {line_no}: {exc}")
                stream.skipped.append((line_no, str(exc)))
                continue
        record = manager.feed(event, index)
        if record is not None:
            alert = Alert(
                record.index,
                event.ts,
                event.subject,
                record.output,
                record.trigger,
                record.post_halt,
            )
            result.records.append(alert)
            if isinstance(record.output, StageOutput):
                result.summary["stage-alerts"] += 1
                result.alerts.append(alert)
            elif record.output is Verdict.UNSECURE:
                result.summary["unsecure"] += 1
                result.alerts.append(alert)
            else:
                result.summary["secure"] += 1
        index += 1
    result.summary["subjects"] = len(manager.sessions)
    result.summary["skipped-lines"] = len(stream.skipped)
    result.exit_code = 2 if result.summary["unsecure"] else 0
    return result
