"""Documents, standoff entity spans, and the annotation table format.

The annotation table is a UTF-8, tab-separated file with the columns::

    filename  ann_id  label  start_span  end_span  text

An optional header row is recognised by its first cell being ``filename``.
Offsets count Unicode code points, ``start`` inclusive and ``end``
exclusive. In the ``text`` column the writer escapes backslash, tab, CR and
LF as ``\\\\``, ``\\t``, ``\\r`` and ``\\n`` so multi-line snippets survive
a round trip; the reader undoes exactly those four sequences.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Sequence, Tuple, Union

from .errors import (
    BadOffset,
    Diagnostic,
    DuplicateAnnId,
    DuplicateDocument,
    EmptyField,
    FormatError,
    MalformedRow,
    OffsetOutOfRange,
    SnippetMismatch,
    UnknownDocument,
)

DEFAULT_LABEL = "SINTOMA"
HEADER = ("filename", "ann_id", "label", "start_span", "end_span", "text")

_OFFSET_RE = re.compile(r"[0-9]+\Z")
_UNESCAPE_RE = re.compile(r"\\([\\tnr])")
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}
_ESCAPES = str.maketrans({"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"})

STRICT = "strict"
LENIENT = "lenient"


@dataclass(frozen=True)
class DocumentText:
    """One clinical report, keyed by its filename stem."""

    doc_id: str
    text: str

    def __post_init__(self):
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        if any(c in self.doc_id for c in "\t\n\r"):
            raise ValueError(f"doc_id contains a tab or newline: {self.doc_id!r}")

    @property
    def length(self) -> int:
        return len(self.text)


class EntitySpan(NamedTuple):
    """A labelled half-open character interval ``[start, end)`` in a document.

    A named tuple rather than a dataclass: corpora hold hundreds of thousands
    of these and tuple construction is several times cheaper.
    """

    doc_id: str
    ann_id: str
    label: str
    start: int
    end: int
    snippet: str

    @property
    def key(self) -> Tuple[int, int, str]:
        """The identity used for matching: ``(start, end, label)``."""
        return (self.start, self.end, self.label)


@dataclass(frozen=True)
class AnnotatedCorpus:
    """Documents plus their spans.

    Built by :func:`bind_corpus`, which establishes the invariants: every
    span resolves to a document, offsets are in range, snippets match the
    text, and each document's spans are sorted by ``(start, end, label)``.
    """

    documents: Dict[str, DocumentText]
    spans: Dict[str, Tuple[EntitySpan, ...]]
    diagnostics: Tuple[Diagnostic, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents.values())

    @property
    def doc_ids(self) -> List[str]:
        return list(self.documents)

    def spans_for(self, doc_id: str) -> Tuple[EntitySpan, ...]:
        return self.spans.get(doc_id, ())

    def all_spans(self) -> List[EntitySpan]:
        return [s for doc_id in self.documents for s in self.spans_for(doc_id)]

    @property
    def n_spans(self) -> int:
        return sum(len(v) for v in self.spans.values())

    def texts(self) -> Dict[str, str]:
        return {d.doc_id: d.text for d in self.documents.values()}

    def subset(self, doc_ids: Iterable[str]) -> "AnnotatedCorpus":
        """Restrict to ``doc_ids`` (unknown ids raise :class:`UnknownDocument`)."""
        wanted = set(doc_ids)
        missing = wanted - set(self.documents)
        if missing:
            raise UnknownDocument(f"unknown documents: {sorted(missing)}")
        docs = {k: v for k, v in self.documents.items() if k in wanted}
        spans = {k: self.spans_for(k) for k in docs}
        return AnnotatedCorpus(docs, spans)


# --------------------------------------------------------------------------
# annotation table I/O


def _decode(data: Union[bytes, str]) -> str:
    if isinstance(data, str):
        text = data
    else:
        try:
            text = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"input is not valid UTF-8: {exc.reason} at byte {exc.start}") from None
    if text.startswith("\ufeff"):
        text = text[1:]
    return text


def _lines(text: str):
    """Yield ``(lineno, line)`` for non-blank lines, LF-split, CR stripped."""
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if line.strip():
            yield lineno, line


def _parse_offset(value: str, name: str, lineno: int) -> int:
    if not _OFFSET_RE.match(value):
        raise BadOffset(f"{name} is not a non-negative base-10 integer: {value!r}", lineno)
    return int(value)


def unescape_field(value: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: _UNESCAPES[m.group(1)], value)


def escape_field(value: str) -> str:
    return value.translate(_ESCAPES)


def parse_annotation_table(data: Union[bytes, str]) -> List[EntitySpan]:
    """Parse an annotation table into spans, preserving row order.

    Raises:
        FormatError: undecodable input.
        MalformedRow: a row without exactly six columns.
        BadOffset: a non-integer offset, or ``start >= end``.
        EmptyField: empty ``filename``, ``ann_id`` or ``label``.
    """
    spans: List[EntitySpan] = []
    first = True
    for lineno, line in _lines(_decode(data)):
        cells = line.split("\t")
        if first:
            first = False
            if cells[0] == "filename":
                continue
        if len(cells) != 6:
            raise MalformedRow(f"expected 6 tab-separated columns, found {len(cells)}", lineno)
        doc_id, ann_id, label, start_s, end_s, snippet = cells
        for name, value in (("filename", doc_id), ("ann_id", ann_id), ("label", label)):
            if not value:
                raise EmptyField(f"{name} is empty", lineno)
        if "\r" in doc_id:
            raise MalformedRow("filename contains a carriage return", lineno)
        start = _parse_offset(start_s, "start_span", lineno)
        end = _parse_offset(end_s, "end_span", lineno)
        if start >= end:
            raise BadOffset(f"start_span {start} is not before end_span {end}", lineno)
        spans.append(EntitySpan(doc_id, ann_id, label, start, end, unescape_field(snippet)))
    return spans


def _row(span: EntitySpan) -> str:
    return "\t".join(
        (span.doc_id, span.ann_id, span.label, str(span.start), str(span.end), escape_field(span.snippet))
    )


def format_annotation_table(spans: Iterable[EntitySpan]) -> bytes:
    """Serialise spans (header first, rows sorted by doc, start, end, ann_id)."""
    rows = sorted(spans, key=lambda s: (s.doc_id, s.start, s.end, s.ann_id))
    lines = ["\t".join(HEADER)] + [_row(s) for s in rows]
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_annotation_table(corpus: AnnotatedCorpus) -> bytes:
    return format_annotation_table(corpus.all_spans())


def read_annotation_table(path: Union[str, os.PathLike]) -> List[EntitySpan]:
    return parse_annotation_table(Path(path).read_bytes())


# --------------------------------------------------------------------------
# text directories


def read_text_dir(path: Union[str, os.PathLike]) -> List[DocumentText]:
    """Load every ``<doc_id>.txt`` in ``path``, sorted by doc_id.

    Files are decoded as raw UTF-8 with no newline translation, so CRLF
    files keep the offsets their annotators saw.
    """
    path = Path(path)
    if not path.is_dir():
        raise FormatError(f"not a directory: {path}")
    docs = []
    for fp in sorted(path.glob("*.txt")):
        try:
            text = fp.read_bytes().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{fp.name} is not valid UTF-8: {exc.reason}") from None
        docs.append(DocumentText(fp.stem, text))
    return docs


def write_text_dir(path: Union[str, os.PathLike], docs: Iterable[DocumentText]) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        (path / f"{doc.doc_id}.txt").write_bytes(doc.text.encode("utf-8"))


# --------------------------------------------------------------------------
# binding


def bind_corpus(
    docs: Sequence[DocumentText],
    spans: Iterable[EntitySpan],
    strictness: str = STRICT,
) -> AnnotatedCorpus:
    """Attach spans to their documents and validate them.

    In ``strict`` mode an out-of-range span or a snippet that differs from
    the text slice raises. In ``lenient`` mode such spans are dropped and
    recorded in ``corpus.diagnostics``. Unknown documents and duplicate
    ``(doc_id, ann_id)`` pairs raise in both modes. Overlapping spans are
    allowed here.
    """
    if strictness not in (STRICT, LENIENT):
        raise ValueError(f"strictness must be 'strict' or 'lenient', got {strictness!r}")
    documents: Dict[str, DocumentText] = {}
    for doc in sorted(docs, key=lambda d: d.doc_id):
        if doc.doc_id in documents:
            raise DuplicateDocument(f"document {doc.doc_id!r} given twice")
        documents[doc.doc_id] = doc

    grouped: Dict[str, List[EntitySpan]] = {doc_id: [] for doc_id in documents}
    seen = set()
    diagnostics: List[Diagnostic] = []
    for span in spans:
        doc = documents.get(span.doc_id)
        if doc is None:
            raise UnknownDocument(f"span {span.ann_id!r} refers to unknown document {span.doc_id!r}")
        ident = (span.doc_id, span.ann_id)
        if ident in seen:
            raise DuplicateAnnId(f"duplicate annotation id {span.ann_id!r} in {span.doc_id!r}")
        seen.add(ident)

        problem = None
        if not 0 <= span.start < span.end <= doc.length:
            problem = OffsetOutOfRange(
                f"{span.doc_id}/{span.ann_id}: [{span.start}, {span.end}) outside document of length {doc.length}"
            )
        elif doc.text[span.start:span.end] != span.snippet:
            problem = SnippetMismatch(
                f"{span.doc_id}/{span.ann_id}: snippet {span.snippet!r} != text "
                f"{doc.text[span.start:span.end]!r}"
            )
        if problem is not None:
            if strictness == STRICT:
                raise problem
            diagnostics.append(Diagnostic(type(problem).__name__, span.doc_id, str(problem), span.ann_id))
            continue
        grouped[span.doc_id].append(span)

    bound = {k: tuple(sorted(v, key=lambda s: (s.start, s.end, s.label, s.ann_id))) for k, v in grouped.items()}
    return AnnotatedCorpus(documents, bound, tuple(diagnostics))


def load_corpus(
    text_dir: Union[str, os.PathLike],
    ann_path: Union[str, os.PathLike, None] = None,
    strictness: str = STRICT,
) -> AnnotatedCorpus:
    """Read a text directory and (optionally) an annotation table and bind them."""
    docs = read_text_dir(text_dir)
    spans = read_annotation_table(ann_path) if ann_path is not None else []
    return bind_corpus(docs, spans, strictness)


def group_spans(spans: Iterable[EntitySpan]) -> Dict[str, List[EntitySpan]]:
    out: Dict[str, List[EntitySpan]] = {}
    for s in spans:
        out.setdefault(s.doc_id, []).append(s)
    return out

