"""Exception types raised across the package."""

from __future__ import annotations


class TimeloomError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TimeloomError):
    """A rule file is syntactically or semantically malformed."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = f" at line {line}" if line is not None else ""
        where += f", col {col}" if col is not None else ""
        super().__init__(f"{message}{where}")


class ArityMismatch(ParseError):
    """A predicate is used with a different number of arguments than declared."""


class DuplicateDeclaration(ParseError):
    """The same predicate name is declared twice."""


class UndeclaredPredicate(ParseError):
    """A predicate is used without a prior declaration."""


class SortError(ParseError):
    """A term is used where its sort is not permitted (also raised at evaluation
    time when ongoing timepoints reach strict arithmetic)."""


class SafetyViolation(ParseError):
    """A rule variable is not bound by any positive body atom."""

    def __init__(self, rule: str, variable: str, line: int | None = None):
        self.rule = rule
        self.variable = variable
        super().__init__(f"unsafe variable {variable} in {rule}", line=line)


class NotStratified(ParseError):
    """The meta-event rules have a cycle through negation or an aggregate."""

    def __init__(self, cycle: tuple[str, ...]):
        self.cycle = cycle
        super().__init__("negation cycle through " + " -> ".join(cycle))


class MissingWindowRule(ParseError):
    """A non-persistent event predicate has existence rules but no window rule."""

    def __init__(self, predicate: str):
        self.predicate = predicate
        super().__init__(f"non-persistent predicate {predicate} has no window rule")


class InvalidInterval(TimeloomError):
    """An interval was constructed with end before start or a negative bound."""


class UnboundVariable(TimeloomError):
    """A term was evaluated under a binding that misses one of its variables."""


class InvalidSpec(TimeloomError):
    """A grounded rule set fails a validity requirement for some event instance.

    kind is one of "MissingWindow", "AmbiguousWindow", "ZeroWindow".
    """

    def __init__(self, kind: str, key: object = None):
        self.kind = kind
        self.key = key
        detail = f" for {key}" if key is not None else ""
        super().__init__(f"{kind}{detail}")


class LevelOverflow(TimeloomError):
    """A rule computed a confidence level below 1."""


class GuardViolated(TimeloomError):
    """A fast path was requested but its applicability guard does not hold.

    reason is "DomainConstraintsPresent" or "TerminationLevelAboveOne".
    """

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class EnumerationCapExceeded(TimeloomError):
    """Subset enumeration hit the configured candidate cap before completing."""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"enumeration cap of {cap} candidates exceeded")


class TooLarge(TimeloomError):
    """A brute-force oracle was asked to enumerate an infeasibly large set."""

    def __init__(self, size: int):
        self.size = size
        super().__init__(f"instance with {size} facts is too large for exhaustive search")


class IoError(TimeloomError):
    """A data or rule file could not be read or written."""


class MappingError(TimeloomError):
    """A CSV mapping file is malformed or references a missing column."""

    def __init__(self, column: object, message: str | None = None):
        self.column = column
        super().__init__(message or f"bad column reference: {column}")


class MalformedTimestamp(TimeloomError):
    """A timestamp field could not be parsed under the configured format."""
