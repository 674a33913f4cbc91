"""Exception types shared across the package.

Every error carries enough context in its message to locate the offending
input (class index, CSV line number, column name) without a debugger.
"""

from __future__ import annotations


class Learn2MixError(Exception):
    """Base class for all package-specific errors."""


class EmptyClass(Learn2MixError):
    """A class index has no samples where at least one is required."""

    def __init__(self, class_id: int, detail: str = ""):
        self.class_id = class_id
        msg = f"class {class_id} has no samples"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DimensionMismatch(Learn2MixError):
    """Array shapes disagree with the declared feature/label dimensions."""


class InvalidSize(Learn2MixError):
    """A size, count, or rate parameter is outside its valid range."""


class ParseError(Learn2MixError):
    """A CSV row could not be parsed."""

    def __init__(self, line: int, detail: str = ""):
        self.line = line
        msg = f"line {line}: malformed row"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class MissingColumn(Learn2MixError):
    """A required column is absent from a CSV header."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"required column {name!r} not found in header")


class NonNumericFeature(Learn2MixError):
    """A numeric column contains a value that does not parse as a float."""

    def __init__(self, line: int, column: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}: column {column!r} is not numeric")


class NegativeLoss(Learn2MixError):
    """A class-wise loss entry is negative; losses must be nonnegative."""


class ZeroTotalLoss(Learn2MixError):
    """All class-wise losses are zero where a normalized vector is required."""


class NonFiniteLoss(Learn2MixError):
    """A loss or gradient evaluated to NaN or infinity."""


class StepDiverged(Learn2MixError):
    """Iterate norm exceeded the divergence guard during a dynamics run."""


class ClassTooSmall(Learn2MixError):
    """A class has a single sample, so no neighbor exists for interpolation."""

    def __init__(self, class_id: int):
        self.class_id = class_id
        super().__init__(f"class {class_id} has one sample; no neighbor available")
