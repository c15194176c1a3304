"""Orchestration: corpus splits, a gazetteer baseline, prediction files.

The gazetteer stands in for a trained tagger so the rest of the machinery
(voting, scoring) can be exercised end to end without model inference.
"""

from __future__ import annotations

import gc
import logging
import math
import os
import random
import unicodedata
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .corpus import (
    DEFAULT_LABEL,
    LENIENT,
    AnnotatedCorpus,
    DocumentText,
    EntitySpan,
    bind_corpus,
    format_annotation_table,
    parse_annotation_table,
)
from .errors import DegenerateSplit, Diagnostic, EmptyTraining
from .ensemble import PredictionSet
from .tagcodec import CLIP, STRICT, TO_B, TagSequence, decode_iob, encode_iob, format_tag_file, parse_tag_file, repair_tags
from .tokenizer import Token, Tokenizer, tokenize

log = logging.getLogger(__name__)

SPAN_TSV = "span_tsv"
TOKEN_TAGS = "token_tags"
PathLike = Union[str, os.PathLike]

_DATA_DIR = Path(__file__).parent / "data"


def toy_corpus_dir() -> Path:
    """Directory of the bundled toy corpus (``texts/`` plus ``annotations.tsv``)."""
    return _DATA_DIR / "toy"


# --------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.95
    seed: int = 42

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


def split_sizes(n: int, train_fraction: float) -> Tuple[int, int]:
    """Train/validation sizes, rounding half up (744 docs at 0.95 -> 707/37)."""
    n_train = math.floor(train_fraction * n + 0.5)
    return n_train, n - n_train


def split_corpus(corpus: AnnotatedCorpus, spec: SplitSpec) -> Tuple[AnnotatedCorpus, AnnotatedCorpus]:
    """Seeded shuffle of the sorted doc_ids, then cut at the rounded train size."""
    doc_ids = sorted(corpus.documents)
    n_train, n_val = split_sizes(len(doc_ids), spec.train_fraction)
    if n_train == 0 or n_val == 0:
        raise DegenerateSplit(
            f"{len(doc_ids)} documents at fraction {spec.train_fraction} gives {n_train}/{n_val}"
        )
    random.Random(spec.seed).shuffle(doc_ids)
    return corpus.subset(doc_ids[:n_train]), corpus.subset(doc_ids[n_train:])


# --------------------------------------------------------------------------
# gazetteer baseline


def normalize(surface: str) -> str:
    """Lowercase, NFKD-decompose and drop combining marks (``Torácico`` -> ``toracico``)."""
    decomposed = unicodedata.normalize("NFKD", surface.lower())
    return "".join(c for c in decomposed if not unicodedata.combining(c))


def _entry_key(surfaces: Iterable[str]) -> str:
    return " ".join(normalize(s) for s in surfaces)


@dataclass(frozen=True)
class Gazetteer:
    """Normalised entity surfaces, each stored as space-joined normalised tokens.

    ``max_tokens`` bounds the window length tried during lookup.
    """

    entries: FrozenSet[str]
    max_tokens: int = 0
    label: str = DEFAULT_LABEL

    def __contains__(self, surface: str) -> bool:
        return _entry_key(t.surface for t in tokenize(surface)) in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def train_gazetteer(train: AnnotatedCorpus, tokenizer: Tokenizer = tokenize, label: str = DEFAULT_LABEL) -> Gazetteer:
    """Collect the normalised snippets of every gold span in ``train``."""
    if train.n_spans == 0:
        raise EmptyTraining("training corpus has no spans")
    entries = set()
    max_tokens = 0
    for span in train.all_spans():
        tokens = tokenizer(span.snippet)
        if not tokens:
            continue
        entries.add(_entry_key(t.surface for t in tokens))
        max_tokens = max(max_tokens, len(tokens))
    return Gazetteer(frozenset(entries), max_tokens, label)


def tag_with_gazetteer(
    text: str,
    gaz: Gazetteer,
    doc_id: str = "",
    tokenizer: Tokenizer = tokenize,
    tokens: Optional[Sequence[Token]] = None,
) -> List[EntitySpan]:
    """Longest-match, left-to-right lookup over token windows.

    Matched tokens are consumed, so spans never overlap. Spans get ann_ids
    ``G1, G2, ...``.
    """
    if tokens is None:
        tokens = tokenizer(text)
    norm = [normalize(t.surface) for t in tokens]
    spans: List[EntitySpan] = []
    i = 0
    while i < len(tokens):
        for n in range(min(gaz.max_tokens, len(tokens) - i), 0, -1):
            if " ".join(norm[i:i + n]) in gaz.entries:
                start, end = tokens[i].start, tokens[i + n - 1].end
                spans.append(EntitySpan(doc_id, f"G{len(spans) + 1}", gaz.label, start, end, text[start:end]))
                i += n
                break
        else:
            i += 1
    return spans


def tag_corpus(docs: Iterable[DocumentText], gaz: Gazetteer, tokenizer: Tokenizer = tokenize) -> Dict[str, List[EntitySpan]]:
    return {d.doc_id: tag_with_gazetteer(d.text, gaz, d.doc_id, tokenizer) for d in sorted(docs, key=lambda d: d.doc_id)}


# --------------------------------------------------------------------------
# per-document fan-out


def _tokenize_one(args):
    doc_id, text, tokenizer = args
    return doc_id, tokenizer(text)


def _encode_one(args):
    doc_id, text, spans, tokenizer, policy, tokens = args
    diags: List[Diagnostic] = []
    if tokens is None:
        tokens = tokenizer(text)
    seq = encode_iob(tokens, spans, policy, doc_id=doc_id, diagnostics=diags)
    return doc_id, seq, diags


@contextmanager
def _gc_paused():
    # Bulk loops allocate millions of small acyclic tuples; letting the cyclic
    # collector rescan them costs roughly 40% of tokenize time.
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def _fan_out(fn, jobs: list, workers: int):
    if workers <= 1 or len(jobs) < 2:
        with _gc_paused():
            return [fn(job) for job in jobs]
    chunksize = max(1, len(jobs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunksize))


def tokenize_corpus(
    docs: Union[AnnotatedCorpus, Iterable[DocumentText]],
    tokenizer: Tokenizer = tokenize,
    workers: int = 1,
) -> Dict[str, List[Token]]:
    """Tokenize every document; ``workers > 1`` uses a process pool.

    The tokenizer must be picklable (a module-level function) when
    ``workers > 1``. Output is keyed and ordered by doc_id either way.
    """
    jobs = [(d.doc_id, d.text, tokenizer) for d in sorted(docs, key=lambda d: d.doc_id)]
    return dict(_fan_out(_tokenize_one, jobs, workers))


def encode_corpus(
    corpus: AnnotatedCorpus,
    overlap_policy: str = STRICT,
    tokenizer: Tokenizer = tokenize,
    workers: int = 1,
    diagnostics: Optional[List[Diagnostic]] = None,
    tokens: Optional[Mapping[str, Sequence[Token]]] = None,
) -> Dict[str, TagSequence]:
    """Encode every document of ``corpus`` to IOB2 tags.

    Pass ``tokens`` (e.g. from :func:`tokenize_corpus`) to reuse an existing
    tokenization instead of running ``tokenizer`` again.
    """
    jobs = [
        (d.doc_id, d.text, corpus.spans_for(d.doc_id), tokenizer, overlap_policy, tokens[d.doc_id] if tokens else None)
        for d in corpus
    ]
    out = {}
    for doc_id, seq, diags in _fan_out(_encode_one, jobs, workers):
        out[doc_id] = seq
        if diagnostics is not None:
            diagnostics.extend(diags)
    return out


def decode_corpus(seqs: Mapping[str, TagSequence], texts: Mapping[str, str]) -> Dict[str, List[EntitySpan]]:
    with _gc_paused():
        return {doc_id: decode_iob(seq, texts[doc_id]) for doc_id, seq in sorted(seqs.items())}


# --------------------------------------------------------------------------
# prediction files


def sniff_format(data: bytes) -> str:
    """``token_tags`` if the first non-blank line starts with ``#doc``, else ``span_tsv``."""
    for line in data.split(b"\n"):
        if line.strip():
            return TOKEN_TAGS if line.startswith(b"#doc") else SPAN_TSV
    return SPAN_TSV


def parse_predictions(
    data: bytes,
    system_id: str,
    fmt: Optional[str] = None,
    texts: Optional[Mapping[str, str]] = None,
    weight: float = 1.0,
    tokenizer: Tokenizer = tokenize,
    tokens: Optional[Mapping[str, Sequence[Token]]] = None,
) -> PredictionSet:
    """Build a :class:`PredictionSet` from prediction-file bytes.

    ``token_tags`` sequences are repaired with ``to_b``; the number of
    rewritten tags is stored in ``repaired``. ``span_tsv`` predictions need
    ``texts``: every document in ``texts`` is tokenized and the spans are
    encoded with the ``clip`` policy (documents without rows get all ``O``).
    Snippets that disagree with the text are dropped with a warning.
    ``tokens`` (doc_id -> tokens) replaces ``tokenizer`` for that encoding.
    """
    fmt = fmt or sniff_format(data)
    repaired = 0
    if fmt == TOKEN_TAGS:
        seqs = parse_tag_file(data, texts)
        predictions = {}
        for doc_id, seq in seqs.items():
            tags, n = repair_tags(seq.tags, TO_B)
            repaired += n
            predictions[doc_id] = TagSequence(doc_id, seq.tokens, tuple(tags))
        if repaired:
            log.warning("%s: repaired %d orphan I- tag(s)", system_id, repaired)
    elif fmt == SPAN_TSV:
        if texts is None:
            raise ValueError("span_tsv predictions need the document texts")
        docs = [DocumentText(doc_id, text) for doc_id, text in texts.items()]
        corpus = bind_corpus(docs, parse_annotation_table(data), LENIENT)
        for diag in corpus.diagnostics:
            log.warning("%s: dropped prediction: %s", system_id, diag)
        diags: List[Diagnostic] = []
        predictions = encode_corpus(corpus, CLIP, tokenizer, diagnostics=diags, tokens=tokens)
        for diag in diags:
            log.warning("%s: %s", system_id, diag)
    else:
        raise ValueError(f"unknown prediction format {fmt!r}")
    return PredictionSet(system_id, predictions, weight, repaired)


def read_predictions(
    path: PathLike,
    fmt: Optional[str] = None,
    texts: Optional[Mapping[str, str]] = None,
    system_id: Optional[str] = None,
    weight: float = 1.0,
    tokenizer: Tokenizer = tokenize,
    tokens: Optional[Mapping[str, Sequence[Token]]] = None,
) -> PredictionSet:
    path = Path(path)
    return parse_predictions(path.read_bytes(), system_id or path.stem, fmt, texts, weight, tokenizer, tokens)


def format_predictions(pset: PredictionSet, fmt: str = TOKEN_TAGS, texts: Optional[Mapping[str, str]] = None) -> bytes:
    if fmt == TOKEN_TAGS:
        return format_tag_file(pset.predictions)
    if fmt == SPAN_TSV:
        if texts is None:
            raise ValueError("span_tsv output needs the document texts")
        spans = [s for doc_spans in decode_corpus(pset.predictions, texts).values() for s in doc_spans]
        return format_annotation_table(spans)
    raise ValueError(f"unknown prediction format {fmt!r}")


def write_predictions(
    path: PathLike, pset: PredictionSet, fmt: str = TOKEN_TAGS, texts: Optional[Mapping[str, str]] = None
) -> None:
    Path(path).write_bytes(format_predictions(pset, fmt, texts))


def spans_to_prediction_set(
    system_id: str,
    spans: Mapping[str, Sequence[EntitySpan]],
    texts: Mapping[str, str],
    weight: float = 1.0,
    tokenizer: Tokenizer = tokenize,
    tokens: Optional[Mapping[str, Sequence[Token]]] = None,
) -> PredictionSet:
    """Encode per-document predicted spans (``clip`` policy) into a PredictionSet."""
    predictions = {
        doc_id: encode_iob(
            tokens[doc_id] if tokens else tokenizer(texts[doc_id]), spans.get(doc_id, ()), CLIP, doc_id=doc_id
        )
        for doc_id in sorted(texts)
    }
    return PredictionSet(system_id, predictions, weight)
