"""
Error types raised by the tactic-forest engine.

Everything derives from ValueError so callers that only care about
"bad input" can keep catching that.
"""

from typing import Optional


class TacticForestError(ValueError):
    """Base class for all domain errors."""


# Terms and corpora

class TermSyntaxError(TacticForestError):
    """Malformed s-expression term."""

    def __init__(self, position: int, reason: str):
        self.position = position
        self.reason = reason
        super().__init__(f"position {position}: {reason}")


class UnbalancedParentheses(TermSyntaxError):
    pass


class EmptyApplication(TermSyntaxError):
    pass


class EmptyInput(TermSyntaxError):
    pass


class RecordError(TacticForestError):
    """A corpus line could not be turned into a labeled example."""

    def __init__(self, line_number: int, reason: str, path: Optional[str] = None):
        self.line_number = line_number
        self.reason = reason
        self.path = path
        where = f"{path}:{line_number}" if path else f"line {line_number}"
        super().__init__(f"{where}: {reason}")


# Features and similarity

class UnknownFeatureId(TacticForestError):
    def __init__(self, feature_id: int):
        self.feature_id = feature_id
        super().__init__(f"feature id {feature_id} was never issued by this interner")


class UnseenFeature(TacticForestError):
    def __init__(self, feature_id: int):
        self.feature_id = feature_id
        super().__init__(f"feature id {feature_id} occurs in no recorded example")


# Random forest

class EmptyLabelSet(TacticForestError):
    pass


class DegenerateSplit(TacticForestError):
    pass


class NoSplittingFeature(TacticForestError):
    pass


# Evaluation

class LengthMismatch(TacticForestError):
    def __init__(self, left: int, right: int):
        super().__init__(f"length mismatch: {left} != {right}")


class EmptyEvaluation(TacticForestError):
    pass


class EmptyTestSet(TacticForestError):
    pass


# Snapshots

class SnapshotError(TacticForestError):
    pass
