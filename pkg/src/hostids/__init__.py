"""Host-based intrusion-detection analysis engine.

Replays normalized audit-event streams through two coupled per-subject
state machines: an access-matrix policy checker that judges every
operation Secure or UnSecure (halting the session on the first violation)
and a signature tracker that follows an intruder's progress through a
partial order of attack stages. A data-acquisition layer validates log
granularity and lifts raw vocabularies into the model's, and a CLI wraps
the whole pipeline with a deterministic trace simulator for testing.
"""

from .acquisition import (
    CRITERIA,
    METHOD_TABLE,
    METHODS,
    Cell,
    Level,
    MethodTable,
    ModelDescriptor,
    NormalizationMap,
    advise_method,
    normalize_event,
    validity_check,
)
from .engine import (
    Alert,
    Bundle,
    ConfigError,
    EngineConfig,
    ReplayResult,
    SessionManager,
    load_bundle,
    load_config,
    replay,
)
from .errors import EngineError
from .model import (
    AccessEntry,
    AccessMatrix,
    EventParseError,
    OperationEvent,
    PolicyParseError,
    glob_match,
    parse_event_stream,
    parse_policy,
    serialize_policy,
)
from .policy import (
    MachineHalted,
    PolicyState,
    SubjectMismatch,
    Verdict,
    policy_run,
    policy_step,
)
from .signatures import (
    BOTTOM_STAGE,
    Scenario,
    Signature,
    SignatureDb,
    SigState,
    StagePoset,
    load_signature_db,
    match_signature,
    sig_step,
    stage_partition,
    validate_scenario,
)
from .simulate import SCENARIOS, UnknownScenario, simulate
from .unified import (
    OpInput,
    SigInput,
    UnifiedSession,
    UnifiedState,
    classify_input,
    unified_run,
    unified_step,
)

__version__ = "0.1.0"

__all__ = [
    "AccessEntry",
    "AccessMatrix",
    "Alert",
    "BOTTOM_STAGE",
    "Bundle",
    "Cell",
    "ConfigError",
    "CRITERIA",
    "EngineConfig",
    "EngineError",
    "EventParseError",
    "glob_match",
    "Level",
    "load_bundle",
    "load_config",
    "load_signature_db",
    "MachineHalted",
    "match_signature",
    "METHOD_TABLE",
    "METHODS",
    "MethodTable",
    "ModelDescriptor",
    "NormalizationMap",
    "normalize_event",
    "OperationEvent",
    "OpInput",
    "parse_event_stream",
    "parse_policy",
    "PolicyParseError",
    "PolicyState",
    "policy_run",
    "policy_step",
    "replay",
    "ReplayResult",
    "Scenario",
    "SCENARIOS",
    "serialize_policy",
    "SessionManager",
    "SigInput",
    "Signature",
    "SignatureDb",
    "SigState",
    "sig_step",
    "simulate",
    "stage_partition",
    "StagePoset",
    "SubjectMismatch",
    "UnifiedSession",
    "UnifiedState",
    "unified_run",
    "unified_step",
    "UnknownScenario",
    "validate_scenario",
    "validity_check",
    "Verdict",
    "advise_method",
    "classify_input",
]
