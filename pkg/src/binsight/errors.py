"""Exception hierarchy shared across the toolkit.

Every error raised on a data path derives from BinsightError so the CLI can
map failures onto its exit-code contract (1 usage, 2 data, 3 invariant).
"""

from __future__ import annotations


class BinsightError(Exception):
    """Base class for all toolkit errors."""


# --- PE parsing -------------------------------------------------------------

class PeError(BinsightError):
    """Base class for PE parse failures."""


class NotPe(PeError):
    """Input lacks the MZ or PE\\0\\0 signatures."""


class Truncated(PeError):
    """A declared header or section-table offset exceeds the file length."""


class MalformedHeader(PeError):
    """Header fields are internally inconsistent (e_lfanew out of range,
    section count incompatible with file size)."""


# --- Imaging ----------------------------------------------------------------

class EmptyInput(BinsightError):
    """Zero-length input where at least one byte is required."""


class InputTooLarge(BinsightError):
    """Input exceeds the configured conversion size guard."""


# --- k-NN -------------------------------------------------------------------

class DimensionMismatch(BinsightError):
    """Vectors of unequal dimensionality."""


class EmptyTable(BinsightError):
    """A feature table with no rows where at least one is required."""


class UnlabeledRow(BinsightError):
    """Training row without a class label."""


class SchemaMismatch(BinsightError):
    """Feature table columns do not match the canonical schema."""


class KTooLarge(BinsightError):
    """Requested neighbor count exceeds the training-set size."""


# --- Corpus and plans -------------------------------------------------------

class MissingRoot(BinsightError):
    """Corpus root directory does not exist."""


class EmptyCorpus(BinsightError):
    """Ingestion produced no usable records."""


class MissingCorpus(BinsightError):
    """An experiment plan requires a corpus that was not supplied."""


class InvariantViolation(BinsightError):
    """A plan or report violates a structural invariant (overlapping
    train/test sets, zero-day family leakage)."""


# --- Evaluation -------------------------------------------------------------

class LengthMismatch(BinsightError):
    """Actual and predicted label lists differ in length."""


class UnknownLabel(BinsightError):
    """A label outside the declared class list."""
