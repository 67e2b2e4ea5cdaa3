"""Exception types shared across the workbench."""

from __future__ import annotations


class ShelflifeError(Exception):
    """Base class for all workbench errors."""


class ParseError(ShelflifeError):
    """A line of an input file could not be parsed.

    Carries the 1-based line number so callers can point at the offending
    record.
    """

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class ConflictError(ShelflifeError):
    """Duplicate (topic, doc) entries with conflicting content."""


class GradeRangeError(ShelflifeError):
    """A relevance grade fell outside the allowed 0..3 range."""


class FormatError(ShelflifeError):
    """Data shape is valid but unsuitable for the requested operation."""


class TagError(ShelflifeError):
    """A run file mixes more than one system tag."""


class NoOverlapError(ShelflifeError):
    """Run and judgments share no topics."""


class InsufficientDataError(ShelflifeError):
    """Too few observations to compute the requested statistic."""


class UndefinedAgreementError(ShelflifeError):
    """Agreement is undefined for the given pair of annotation sets."""


class ShapeError(ShelflifeError):
    """Rating table rows disagree on the number of raters."""


class DegenerateError(ShelflifeError):
    """A statistic is degenerate for the given input (e.g. zero variance)."""


class EnumerationTooLargeError(ShelflifeError):
    """Exhaustive combination enumeration would overflow; sample instead."""


class CoverageError(ShelflifeError):
    """A combination spec does not cover the requested topics/sets."""


class ConfigurationError(ShelflifeError):
    """Invalid workbench configuration."""


class OwnershipError(ShelflifeError):
    """An annotator acted on a task outside their assignment."""


class UnknownAnnotatorError(ShelflifeError):
    """No such annotator in the roster/assignment."""


class ValidationError(ShelflifeError):
    """A submitted event failed validation."""


class ReplayError(ShelflifeError):
    """The annotation log could not be replayed."""
