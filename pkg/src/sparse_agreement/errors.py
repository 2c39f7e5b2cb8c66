"""Exception taxonomy for agreement computation and ingestion."""

from __future__ import annotations


class SparseAgreementError(Exception):
    """Base class for all errors raised by this package."""


class UndefinedAgreementError(SparseAgreementError):
    """Item agreement requested for an item with fewer than 2 annotations."""


class FullAnnotationViolation(SparseAgreementError):
    """A full-annotation metric was called on a table with unequal item depths."""


class EmptyTableError(SparseAgreementError):
    """The annotation table holds no annotations at all."""


class ChanceDegenerateError(SparseAgreementError):
    """Chance agreement equals 1 (all mass in one class); kappa is undefined."""


class NoComputableItemsError(SparseAgreementError):
    """No item carries enough annotations (or weight) to compute agreement."""


class InvalidClassCountError(SparseAgreementError):
    """A class-count argument outside the supported range."""


class EnumerationTooLargeError(SparseAgreementError):
    """Brute-force outcome enumeration would exceed the safety guard."""


class DegenerateCurveError(SparseAgreementError):
    """All raw weights in a curve are zero; normalization is impossible."""


class NothingToRemoveError(SparseAgreementError):
    """Annotation removal requested from an empty table."""


class EmptySubsampleError(SparseAgreementError):
    """A subsampling target is unreachable (e.g. no item has k annotations)."""


class DegenerateExperimentError(SparseAgreementError):
    """Every Monte Carlo trial was skipped; no statistics exist."""


class FormatError(SparseAgreementError):
    """Malformed input file. Carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateAnnotationError(FormatError):
    """Duplicate (item, annotator) pair under the `error` ingestion policy."""
