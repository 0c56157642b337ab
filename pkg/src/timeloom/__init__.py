"""Rule-based inference of event timelines from timestamped observations.

Parse a rule file with `parse_tes`, load facts with `ingest` or the model
constructors, then call `timeline` for any of the four modes, or work with
`repairs`, `preferred_repairs`, `cautious_core`, and `recognize_timeline`
directly.
"""

from .errors import (
    ArityMismatch,
    DuplicateDeclaration,
    EnumerationCapExceeded,
    GuardViolated,
    InvalidInterval,
    InvalidSpec,
    IoError,
    LevelOverflow,
    MalformedTimestamp,
    MappingError,
    MissingWindowRule,
    NotStratified,
    ParseError,
    SafetyViolation,
    SortError,
    TimeloomError,
    TooLarge,
    UnboundVariable,
    UndeclaredPredicate,
)
from .ingest import ingest, parse_fact_text, validate_dataset
from .language import TES, PredKind, parse_tes, print_tes
from .meta import infer_meta, infer_timeline_facts
from .model import (
    STAR,
    AnnotatedEventFact,
    AtemporalFact,
    Dataset,
    EventFact,
    EventStore,
    Interval,
    ObservationFact,
    allen_relation,
)
from .oracle import (
    Cnf3,
    brute_preferred,
    brute_repairs,
    encode_3sat_cautious,
    encode_3sat_consistent,
    probe_fact,
    read_dimacs,
    sat_by_truth_table,
)
from .query import eval_body, ground_simple_heads, level_timepoints
from .repair import (
    DEFAULT_CAP,
    RepairSet,
    TimelineResult,
    cautious_core,
    greedy_preferred,
    is_consistent,
    preferred_repairs,
    recognize_timeline,
    repairs,
    temporal_conflict,
    timeline,
)
from .simple import infer_all_simple, infer_nonpersistent, infer_persistent, oracle_check_interval

__version__ = "0.1.0"

__all__ = [
    "TES",
    "PredKind",
    "parse_tes",
    "print_tes",
    "STAR",
    "Interval",
    "Dataset",
    "EventStore",
    "AtemporalFact",
    "ObservationFact",
    "EventFact",
    "AnnotatedEventFact",
    "allen_relation",
    "eval_body",
    "ground_simple_heads",
    "level_timepoints",
    "infer_all_simple",
    "infer_nonpersistent",
    "infer_persistent",
    "oracle_check_interval",
    "infer_meta",
    "infer_timeline_facts",
    "temporal_conflict",
    "is_consistent",
    "repairs",
    "RepairSet",
    "preferred_repairs",
    "greedy_preferred",
    "cautious_core",
    "timeline",
    "TimelineResult",
    "recognize_timeline",
    "DEFAULT_CAP",
    "ingest",
    "parse_fact_text",
    "validate_dataset",
    "Cnf3",
    "read_dimacs",
    "sat_by_truth_table",
    "brute_repairs",
    "brute_preferred",
    "encode_3sat_consistent",
    "encode_3sat_cautious",
    "probe_fact",
    "TimeloomError",
    "ParseError",
    "ArityMismatch",
    "DuplicateDeclaration",
    "UndeclaredPredicate",
    "SortError",
    "SafetyViolation",
    "NotStratified",
    "MissingWindowRule",
    "InvalidInterval",
    "UnboundVariable",
    "InvalidSpec",
    "LevelOverflow",
    "GuardViolated",
    "EnumerationCapExceeded",
    "TooLarge",
    "IoError",
    "MappingError",
    "MalformedTimestamp",
]
