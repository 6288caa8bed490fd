"""Exception types shared across the engine."""


class PeelerError(Exception):
    """Base class for all engine errors."""


class ParseError(PeelerError):
    """Malformed input line in a trace, rules, or model file."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class SchemaError(PeelerError):
    """Structurally valid input that violates a data-model invariant."""


class DuplicateRuleIdError(PeelerError):
    """Two rules in one rules file share an id."""


class VersionMismatchError(PeelerError):
    """File carries a format version this reader does not support."""


class SingleClassError(PeelerError):
    """Training data contains only one class label."""


class CorpusError(PeelerError):
    """Corpus is unusable for the requested operation (e.g. a label class is empty)."""
