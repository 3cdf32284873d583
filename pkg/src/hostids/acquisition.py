"""Data-acquisition layer.

Raw audit sources record at different granularity levels (rank 0 is the
finest). An analysis model is only valid when the acquired data is at least
as fine as every level the model works at. Normalization maps lift raw
operation and program names into the model vocabulary through exact-match
tables; a missing entry is a hard error because analysis over partially
translated data is not trustworthy.

The module also embeds a comparison grid of five acquisition methods scored
Up/Down/Mixed against nine engineering criteria, and ranks the methods for
a caller-supplied weighting of those criteria.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import EngineError
from .model import OperationEvent


class EmptyModelSet(EngineError):
    """A validity check was asked to run against zero models."""


class UnmappedOperation(EngineError):
    """The operation table has no entry for a raw operation name."""


class UnmappedProgram(EngineError):
    """The program table has no entry for a raw program name."""


class LevelMismatch(EngineError):
    """An event's level disagrees with the map chosen to normalize it."""


class AllZeroWeights(EngineError):
    """Method ranking needs at least one positive criterion weight."""


DEFAULT_LEVEL_LABELS = {0: "system-call", 1: "api", 2: "command"}


@dataclass(frozen=True)
class Level:
    """Granularity of an audit source; lower rank means finer-grained data."""

    rank: int
    label: str = ""

    def __post_init__(self):
        if isinstance(self.rank, bool) or not isinstance(self.rank, int) or self.rank < 0:
            raise ValueError("level rank must be a non-negative integer")
        if not self.label:
            object.__setattr__(self, "label", level_label(self.rank))


def level_label(rank: int, labels: Mapping[int, str] | None = None) -> str:
    table = DEFAULT_LEVEL_LABELS if labels is None else labels
    return table.get(rank, f"level-{rank}")


@dataclass(frozen=True)
class ModelDescriptor:
    """An analysis model and the set of level ranks it consumes."""

    id: str
    levels: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "levels", frozenset(self.levels))
        if not self.levels:
            raise ValueError(f"model {self.id!r} declares no levels")
        if any(isinstance(l, bool) or not isinstance(l, int) or l < 0 for l in self.levels):
            raise ValueError(f"model {self.id!r} has a bad level rank")

    @property
    def min_level(self) -> int:
        return min(self.levels)


def validity_check(lev_data: Level, models: Iterable[ModelDescriptor]) -> list[str]:
    """Ids of models that need finer data than `lev_data` provides.

    Empty result means the configuration is valid: the acquisition level is
    at or below (finer than) every model's minimum level.
    """
    models = list(models)
    if not models:
        raise EmptyModelSet("validity check needs at least one model")
    return [m.id for m in models if m.min_level < lev_data.rank]


@dataclass(frozen=True)
class NormalizationMap:
    """Exact-match lifting from one raw level into the model vocabulary.

    `level` is the rank this map applies to; `op_map` and `prog_map`
    translate raw operation and program names. `model_level` is the rank
    stamped on normalized events (defaults to the source level).
    """

    level: int
    op_map: Mapping[str, str]
    prog_map: Mapping[str, str]
    model_level: int | None = None

    def __post_init__(self):
        for name, table in (("op_map", self.op_map), ("prog_map", self.prog_map)):
            for key, value in table.items():
                if not key or not value:
                    raise ValueError(f"{name} must not contain empty names")

    @property
    def target_level(self) -> int:
        return self.level if self.model_level is None else self.model_level


def normalize_event(nmap: NormalizationMap, raw: OperationEvent) -> OperationEvent:
    """Translate op and program, restamp the level, keep everything else."""
    if raw.level != nmap.level:
        raise LevelMismatch(f"event level {raw.level} does not match map level {nmap.level}")
    if raw.op not in nmap.op_map:
        raise UnmappedOperation(f"no translation for operation {raw.op!r} at level {raw.level}")
    if raw.program not in nmap.prog_map:
        raise UnmappedProgram(f"no translation for program {raw.program!r} at level {raw.level}")
    return dataclasses.replace(
        raw,
        op=nmap.op_map[raw.op],
        program=nmap.prog_map[raw.program],
        level=nmap.target_level,
    )


def load_normalization_map(document: str) -> NormalizationMap:
    """Parse a map file: JSON {level, op_map, prog_map, model_level?}."""
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise EngineError(f"invalid normalization map JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise EngineError("normalization map must be a JSON object")
    level = obj.get("level")
    if isinstance(level, bool) or not isinstance(level, int) or level < 0:
        raise EngineError("normalization map needs a non-negative integer 'level'")
    tables: dict[str, dict[str, str]] = {}
    for name in ("op_map", "prog_map"):
        table = obj.get(name, {})
        if not isinstance(table, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in table.items()
        ):
            raise EngineError(f"normalization map {name} must be a string-to-string object")
        tables[name] = table
    model_level = obj.get("model_level")
    if model_level is not None and (
        isinstance(model_level, bool) or not isinstance(model_level, int) or model_level < 0
    ):
        raise EngineError("model_level must be a non-negative integer when present")
    try:
        return NormalizationMap(level, tables["op_map"], tables["prog_map"], model_level)
    except ValueError as exc:
        raise EngineError(str(exc)) from None


def load_model_descriptors(document: str) -> list[ModelDescriptor]:
    """Parse a model list: JSON [{id, levels: [ints]}, ...]."""
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise EngineError(f"invalid model descriptor JSON: {exc}") from None
    if not isinstance(obj, list):
        raise EngineError("model descriptors must be a JSON list")
    models: list[ModelDescriptor] = []
    for item in obj:
        if not isinstance(item, dict) or not isinstance(item.get("id"), str) or not item["id"]:
            raise EngineError(f"bad model descriptor {item!r}")
        levels = item.get("levels")
        if not isinstance(levels, list):
            raise EngineError(f"model {item['id']!r}: levels must be a list of integers")
        try:
            models.append(ModelDescriptor(item["id"], frozenset(levels)))
        except (ValueError, TypeError) as exc:
            raise EngineError(f"model {item['id']!r}: {exc}") from None
    return models


class Cell(Enum):
    """How a method fares on one criterion."""

    UP = 1
    DOWN = -1
    MIXED = 0


METHODS: tuple[str, ...] = (
    "standard-audit",
    "system-calls",
    "os-drivers",
    "shells",
    "performance-tools",
)

METHOD_LABELS: dict[str, str] = {
    "standard-audit": "Standard audit",
    "system-calls": "System calls",
    "os-drivers": "OS drivers",
    "shells": "Shells",
    "performance-tools": "Performance tools",
}

CRITERIA: tuple[str, ...] = (
    "information-content",
    "info-acquisition",
    "attack-detection",
    "anomaly-detection",
    "operation-analysis",
    "versatility",
    "transparency",
    "user-free-acquisition",
    "protectibility",
)

CRITERION_LABELS: dict[str, str] = {
    "information-content": "richness of captured information",
    "info-acquisition": "ease of acquiring the information",
    "attack-detection": "suitability for attack detection",
    "anomaly-detection": "suitability for anomaly detection",
    "operation-analysis": "insight into system operation",
    "versatility": "versatility across environments",
    "transparency": "transparency to the user",
    "user-free-acquisition": "acquisition without user involvement",
    "protectibility": "protectibility of the collector itself",
}

_U, _D, _M = Cell.UP, Cell.DOWN, Cell.MIXED

# rows follow CRITERIA, columns follow METHODS
_GRID: dict[str, tuple[Cell, Cell, Cell, Cell, Cell]] = {
    "information-content": (_D, _U, _D, _M, _M),
    "info-acquisition": (_U, _M, _D, _U, _U),
    "attack-detection": (_U, _U, _U, _U, _U),
    "anomaly-detection": (_M, _U, _U, _U, _U),
    "operation-analysis": (_M, _U, _U, _U, _D),
    "versatility": (_U, _U, _D, _D, _D),
    "transparency": (_U, _U, _U, _D, _D),
    "user-free-acquisition": (_U, _U, _U, _D, _D),
    "protectibility": (_D, _D, _U, _D, _D),
}


@dataclass(frozen=True)
class MethodTable:
    """Total grid of method-versus-criterion cells."""

    methods: tuple[str, ...]
    criteria: tuple[str, ...]
    cells: Mapping[str, tuple[Cell, ...]]  # criterion -> row in method order

    def __post_init__(self):
        for criterion in self.criteria:
            row = self.cells.get(criterion)
            if row is None or len(row) != len(self.methods):
                raise ValueError(f"grid row {criterion!r} is missing or ragged")

    def cell(self, criterion: str, method: str) -> Cell:
        return self.cells[criterion][self.methods.index(method)]


METHOD_TABLE = MethodTable(METHODS, CRITERIA, _GRID)


def advise_method(
    table: MethodTable, weights: Mapping[str, float]
) -> list[tuple[str, float]]:
    """Rank methods by the weighted sum of their cells.

    Up counts +1, Down -1, Mixed 0 per unit weight. Ties keep the table's
    column order, so equal-scoring methods rank deterministically.
    """
    unknown = set(weights) - set(table.criteria)
    if unknown:
        raise EngineError(f"unknown criterion {sorted(unknown)[0]!r}")
    if any(w < 0 for w in weights.values()):
        raise EngineError("criterion weights must be non-negative")
    if not any(w > 0 for w in weights.values()):
        raise AllZeroWeights("at least one criterion weight must be positive")
    scores = []
    for i, method in enumerate(table.methods):
        score = 0.0
        for criterion, weight in weights.items():
            score += weight * table.cells[criterion][i].value
        scores.append((method, score))
    # stable sort keeps column order within equal scores
    return sorted(scores, key=lambda pair: -pair[1])
