"""Exception hierarchy.

Every failure raised by the parsers and validators derives from
:class:`ClinspanError`, so callers (and the CLI) can catch one type.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class ClinspanError(Exception):
    """Base class. ``line`` is the 1-based input line when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(ClinspanError):
    """Input could not be decoded or does not follow the file layout."""


class MalformedRow(FormatError):
    pass


class BadOffset(FormatError):
    pass


class EmptyField(FormatError):
    pass


class UnknownDocument(ClinspanError):
    pass


class DuplicateDocument(ClinspanError):
    pass


class OffsetOutOfRange(ClinspanError):
    pass


class SnippetMismatch(ClinspanError):
    pass


class DuplicateAnnId(ClinspanError):
    pass


class OverlappingSpans(ClinspanError):
    pass


class MisalignedBoundary(ClinspanError):
    pass


class TokenSpanMismatch(ClinspanError):
    pass


class InvalidSequence(ClinspanError):
    pass


class TokenizationMismatch(ClinspanError):
    pass


class EmptyEnsemble(ClinspanError):
    pass


class DegenerateSplit(ClinspanError):
    pass


class EmptyTraining(ClinspanError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    """A non-fatal problem recorded instead of raised (lenient/clip modes)."""

    kind: str
    doc_id: str
    message: str
    ann_id: Optional[str] = None

    def __str__(self) -> str:
        where = self.doc_id if self.ann_id is None else f"{self.doc_id}/{self.ann_id}"
        return f"{self.kind} [{where}]: {self.message}"
