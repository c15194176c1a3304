"""Character spans <-> per-token IOB2 tags.

A token is inside a span iff their half-open intervals intersect. Every
entity starts with ``B-``; :func:`repair_tags` rewrites IOB1-style or
otherwise orphaned ``I-`` tags.

The tag-sequence file holds, per document, a ``#doc <doc_id>`` line followed
by one ``start<TAB>end<TAB>surface<TAB>tag`` line per token, with a blank
line between documents.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .corpus import EntitySpan, _decode, _parse_offset
from .errors import (
    BadOffset,
    Diagnostic,
    FormatError,
    InvalidSequence,
    MalformedRow,
    MisalignedBoundary,
    OverlappingSpans,
    TokenSpanMismatch,
    UnknownDocument,
)
from .tokenizer import Token, check_tokens

OUTSIDE = "O"
STRICT = "strict"
CLIP = "clip"
TO_B = "to_b"
DROP = "drop"


@dataclass(frozen=True)
class TagSequence:
    """A document's tokens and one tag per token."""

    doc_id: str
    tokens: Tuple[Token, ...]
    tags: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags):
            raise ValueError(f"{self.doc_id}: {len(self.tokens)} tokens but {len(self.tags)} tags")

    def __len__(self) -> int:
        return len(self.tags)

    @property
    def is_valid(self) -> bool:
        return is_valid_iob(self.tags)


@lru_cache(maxsize=1024)
def _parse_tag(tag: str) -> Optional[Tuple[str, Optional[str]]]:
    if tag == OUTSIDE:
        return OUTSIDE, None
    if len(tag) > 2 and tag[0] in "BI" and tag[1] == "-" and not any(c in tag for c in "\t\n\r"):
        return tag[0], tag[2:]
    return None


def split_tag(tag: str) -> Tuple[str, Optional[str]]:
    """``"B-SINTOMA"`` -> ``("B", "SINTOMA")``; ``"O"`` -> ``("O", None)``."""
    parsed = _parse_tag(tag)
    if parsed is None:
        raise InvalidSequence(f"not an IOB tag: {tag!r}")
    return parsed


def is_valid_iob(tags: Sequence[str]) -> bool:
    prev_label = None
    for tag in tags:
        parsed = _parse_tag(tag)
        if parsed is None:
            return False
        prefix, label = parsed
        if prefix == "I" and label != prev_label:
            return False
        prev_label = label
    return True


def repair_tags(tags: Sequence[str], mode: str = TO_B) -> Tuple[List[str], int]:
    """Fix orphan ``I-L`` tags (those not preceded by ``B-L`` or ``I-L``).

    ``to_b`` turns an orphan into ``B-L``; ``drop`` turns it into ``O``.
    Decisions look at the already-repaired predecessor, so the result is
    always valid. Returns the repaired tags and the number of rewrites.
    """
    if mode not in (TO_B, DROP):
        raise ValueError(f"repair mode must be 'to_b' or 'drop', got {mode!r}")
    out: List[str] = []
    fixed = 0
    prev_label = None
    for tag in tags:
        prefix, label = split_tag(tag)
        if prefix == "I" and label != prev_label:
            fixed += 1
            if mode == TO_B:
                tag = "B-" + label
            else:
                tag, label = OUTSIDE, None
        out.append(tag)
        prev_label = label
    return out, fixed


def _where(span: EntitySpan) -> str:
    return f"span {span.ann_id!r} [{span.start}, {span.end})"


def encode_iob(
    tokens: Sequence[Token],
    spans: Iterable[EntitySpan],
    overlap_policy: str = STRICT,
    doc_id: Optional[str] = None,
    diagnostics: Optional[List[Diagnostic]] = None,
) -> TagSequence:
    """Tag ``tokens`` from character ``spans``.

    Under ``strict`` the spans must be pairwise disjoint and start/end on
    token boundaries. Under ``clip`` a boundary that falls inside a token is
    widened to the token edge (one ``MisalignedBoundary`` diagnostic per
    span) and tokens already claimed by an earlier span (in ``(start, -end)``
    order) are skipped (one ``OverlappingSpans`` diagnostic). Diagnostics are
    appended to ``diagnostics`` when a list is passed.

    Raises:
        TokenSpanMismatch: a span that overlaps no token (either policy).
        OverlappingSpans, MisalignedBoundary: strict policy only.
    """
    if overlap_policy not in (STRICT, CLIP):
        raise ValueError(f"overlap_policy must be 'strict' or 'clip', got {overlap_policy!r}")
    spans = sorted(spans, key=lambda s: (s.start, -s.end, s.label))
    if doc_id is None:
        doc_id = spans[0].doc_id if spans else ""
    starts = [t.start for t in tokens]
    ends = [t.end for t in tokens]
    tags = [OUTSIDE] * len(tokens)
    strict = overlap_policy == STRICT
    claimed = None if strict else [False] * len(tokens)

    def note(kind: str, span: EntitySpan, message: str) -> None:
        if diagnostics is not None:
            diagnostics.append(Diagnostic(kind, doc_id, message, span.ann_id))

    prev_end = None
    for span in spans:
        # tokens i in [lo, hi) intersect [span.start, span.end)
        lo = bisect_right(ends, span.start)
        hi = bisect_left(starts, span.end)
        if lo >= hi:
            raise TokenSpanMismatch(f"{doc_id}: {_where(span)} covers no token")
        aligned = starts[lo] == span.start and ends[hi - 1] == span.end
        overlapping = prev_end is not None and span.start < prev_end
        prev_end = span.end if prev_end is None else max(prev_end, span.end)
        if strict:
            if overlapping:
                raise OverlappingSpans(f"{doc_id}: {_where(span)} overlaps an earlier span")
            if not aligned:
                raise MisalignedBoundary(f"{doc_id}: {_where(span)} does not start and end on token boundaries")
            tags[lo] = "B-" + span.label
            if hi - lo > 1:
                tags[lo + 1:hi] = ["I-" + span.label] * (hi - lo - 1)
            continue
        if not aligned:
            note("MisalignedBoundary", span, f"{_where(span)} widened to [{starts[lo]}, {ends[hi - 1]})")
        if any(claimed[lo:hi]):
            note("OverlappingSpans", span, f"{_where(span)} overlaps an earlier span; shared tokens kept by the earlier one")
        prefix = "B-"
        for i in range(lo, hi):
            if claimed[i]:
                continue
            tags[i] = prefix + span.label
            claimed[i] = True
            prefix = "I-"
    return TagSequence(doc_id, tuple(tokens), tuple(tags))


def decode_iob(seq: TagSequence, text: str, repair: Optional[str] = None) -> List[EntitySpan]:
    """Turn each maximal ``B-L (I-L)*`` run into a span.

    ``ann_id`` values are ``P1, P2, ...`` in document order. An invalid
    sequence raises :class:`InvalidSequence` unless ``repair`` names a
    :func:`repair_tags` mode.
    """
    tags: Sequence[str] = seq.tags
    if repair is not None:
        tags, _ = repair_tags(tags, repair)
    elif not is_valid_iob(tags):
        raise InvalidSequence(f"{seq.doc_id}: tag sequence is not valid IOB2")
    spans: List[EntitySpan] = []
    tokens = seq.tokens
    doc_id = seq.doc_id
    # (first token, last token, label) of each maximal run
    runs = []
    run_start = run_end = None
    run_label = None
    for i, tag in enumerate(tags):
        if tag == OUTSIDE:
            if run_start is not None:
                runs.append((run_start, run_end, run_label))
                run_start = None
        elif tag[0] == "B":
            if run_start is not None:
                runs.append((run_start, run_end, run_label))
            run_start = run_end = i
            run_label = tag[2:]
        else:
            run_end = i
    if run_start is not None:
        runs.append((run_start, run_end, run_label))
    for n, (first, last, label) in enumerate(runs, 1):
        start, end = tokens[first].start, tokens[last].end
        spans.append(EntitySpan(doc_id, f"P{n}", label, start, end, text[start:end]))
    return spans


# --------------------------------------------------------------------------
# tag-sequence files


def format_tag_file(seqs: Union[Mapping[str, TagSequence], Iterable[TagSequence]]) -> bytes:
    """Serialise tag sequences, documents sorted by doc_id."""
    if isinstance(seqs, Mapping):
        seqs = seqs.values()
    blocks = []
    for seq in sorted(seqs, key=lambda s: s.doc_id):
        lines = [f"#doc {seq.doc_id}"]
        lines += [f"{t.start}\t{t.end}\t{t.surface}\t{tag}" for t, tag in zip(seq.tokens, seq.tags)]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks).encode("utf-8")


def parse_tag_file(
    data: Union[bytes, str], texts: Optional[Mapping[str, str]] = None
) -> Dict[str, TagSequence]:
    """Read a tag-sequence file into ``doc_id -> TagSequence``.

    Tag syntax is checked but IOB validity is not (see :func:`repair_tags`).
    When ``texts`` is given, tokens are validated against the document text.
    """
    out: Dict[str, TagSequence] = {}
    doc_id = None
    tokens: List[Token] = []
    tags: List[str] = []

    def flush():
        if doc_id is not None:
            out[doc_id] = TagSequence(doc_id, tuple(tokens), tuple(tags))

    for lineno, line in enumerate(_decode(data).split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if not line.strip():
            continue
        if line.startswith("#doc "):
            flush()
            doc_id = line[5:]
            if not doc_id or doc_id.strip() != doc_id or "\t" in doc_id:
                raise FormatError(f"bad document id {doc_id!r}", lineno)
            if doc_id in out:
                raise FormatError(f"document {doc_id!r} appears twice", lineno)
            tokens, tags = [], []
            continue
        if doc_id is None:
            raise FormatError("token line before any '#doc' line", lineno)
        cells = line.split("\t")
        if len(cells) != 4:
            raise MalformedRow(f"expected 4 tab-separated columns, found {len(cells)}", lineno)
        start = _parse_offset(cells[0], "start", lineno)
        end = _parse_offset(cells[1], "end", lineno)
        if start >= end:
            raise BadOffset(f"start {start} is not before end {end}", lineno)
        if tokens and start < tokens[-1].end:
            raise BadOffset(f"token at {start} overlaps the previous token", lineno)
        surface, tag = cells[2], cells[3]
        if len(surface) != end - start:
            raise FormatError(f"surface {surface!r} does not span [{start}, {end})", lineno)
        try:
            split_tag(tag)
        except InvalidSequence as exc:
            raise FormatError(str(exc), lineno) from None
        tokens.append(Token(start, end, surface))
        tags.append(tag)
    flush()
    if texts is not None:
        for seq in out.values():
            if seq.doc_id not in texts:
                raise UnknownDocument(f"tag file refers to unknown document {seq.doc_id!r}")
            check_tokens(seq.tokens, texts[seq.doc_id], seq.doc_id)
    return out
