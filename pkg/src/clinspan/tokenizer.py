"""Offset-preserving rule tokenizer.

Rules, applied to each maximal run of non-whitespace characters:

1. runs are delimited by Unicode whitespace (``str.isspace``);
2. characters of Unicode category ``P*`` or ``S*`` at either edge of a run
   are split off one at a time as single-character tokens;
3. punctuation inside a run stays attached, so ``38.5``, ``c/d`` and
   ``post-operatorio`` remain one token each.

Any callable ``text -> list[Token]`` can stand in for :func:`tokenize`;
externally produced token offsets are read with :func:`parse_token_offsets`.
"""

from __future__ import annotations

import re
import unicodedata
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, NamedTuple, Sequence, Union

from .corpus import _decode, _lines, _parse_offset
from .errors import BadOffset, FormatError, MalformedRow, UnknownDocument


class Token(NamedTuple):
    start: int
    end: int
    surface: str


Tokenizer = Callable[[str], List[Token]]

_RUN_RE = re.compile(r"\S+")


@lru_cache(maxsize=4096)
def _is_edge_punct(char: str) -> bool:
    return unicodedata.category(char)[0] in "PS"


# When every character outside \w and \s is P*/S* (checked per text), a
# token is either one such character or a run that starts and ends on a
# word character other than "_".
_FAST_RE = re.compile(r"[^\w\s]|_|[^\W_](?:\S*[^\W_])?")
_CANDIDATE_RE = re.compile(r"[^\w\s]|_")


def tokenize(text: str) -> List[Token]:
    """Split ``text`` into tokens whose offsets index into ``text``.

    >>> [t.surface for t in tokenize("fiebre, tos.")]
    ['fiebre', ',', 'tos', '.']
    """
    if all(_is_edge_punct(c) for c in set(_CANDIDATE_RE.findall(text))):
        new = tuple.__new__
        return [new(Token, (m.start(), m.end(), m.group())) for m in _FAST_RE.finditer(text)]
    return _tokenize_runs(text)


def _tokenize_runs(text: str) -> List[Token]:
    tokens: List[Token] = []
    append = tokens.append
    for match in _RUN_RE.finditer(text):
        run = match.group()
        if not (_is_edge_punct(run[0]) or _is_edge_punct(run[-1])):
            append(Token(match.start(), match.end(), run))
            continue
        base = match.start()
        i, j = 0, len(run)
        while i < j and _is_edge_punct(run[i]):
            append(Token(base + i, base + i + 1, run[i]))
            i += 1
        trailing = []
        while j > i and _is_edge_punct(run[j - 1]):
            j -= 1
            trailing.append(Token(base + j, base + j + 1, run[j]))
        if i < j:
            append(Token(base + i, base + j, run[i:j]))
        tokens.extend(reversed(trailing))
    return tokens


def check_tokens(tokens: Sequence[Token], text: str, doc_id: str = "") -> None:
    """Raise :class:`FormatError` unless ``tokens`` is a valid tokenization of ``text``.

    Valid means: in range, non-empty, strictly increasing and non-overlapping,
    surfaces equal to the text slice and free of whitespace.
    """
    prev_end = 0
    for tok in tokens:
        if not 0 <= tok.start < tok.end <= len(text):
            raise FormatError(f"{doc_id}: token [{tok.start}, {tok.end}) out of range")
        if tok.start < prev_end:
            raise FormatError(f"{doc_id}: token [{tok.start}, {tok.end}) overlaps or precedes its predecessor")
        if text[tok.start:tok.end] != tok.surface:
            raise FormatError(f"{doc_id}: token surface {tok.surface!r} does not match the text")
        if any(c.isspace() for c in tok.surface):
            raise FormatError(f"{doc_id}: token [{tok.start}, {tok.end}) contains whitespace")
        prev_end = tok.end


def parse_token_offsets(
    data: Union[bytes, str], texts: Mapping[str, str]
) -> Dict[str, List[Token]]:
    """Read an external tokenization (TSV rows ``doc_id  start  end``).

    Every document in ``texts`` gets an entry (possibly empty); rows for
    unknown documents raise :class:`UnknownDocument`.
    """
    out: Dict[str, List[Token]] = {doc_id: [] for doc_id in texts}
    for lineno, line in _lines(_decode(data)):
        cells = line.split("\t")
        if len(cells) != 3:
            raise MalformedRow(f"expected 3 tab-separated columns, found {len(cells)}", lineno)
        doc_id, start_s, end_s = cells
        if doc_id not in texts:
            raise UnknownDocument(f"unknown document {doc_id!r}", lineno)
        start = _parse_offset(start_s, "start", lineno)
        end = _parse_offset(end_s, "end", lineno)
        if start >= end:
            raise BadOffset(f"start {start} is not before end {end}", lineno)
        out[doc_id].append(Token(start, end, texts[doc_id][start:end]))
    for doc_id, tokens in out.items():
        check_tokens(tokens, texts[doc_id], doc_id)
    return out


def format_token_offsets(tokenized: Mapping[str, Iterable[Token]]) -> bytes:
    lines = [
        f"{doc_id}\t{tok.start}\t{tok.end}"
        for doc_id in sorted(tokenized)
        for tok in tokenized[doc_id]
    ]
    return "".join(line + "\n" for line in lines).encode("utf-8")

