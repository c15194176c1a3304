"""Weighted majority voting over several systems' predictions.

Two levels are offered. :func:`vote_tokens` takes, for every token, the tag
with the largest total weight. :func:`vote_spans` keeps whole spans whose
supporting weight is a strict majority (or a chosen fraction) of the total.
With all weights equal both reduce to plain majority voting.

Vote totals are summed exactly (``math.fsum`` for tags, ``Fraction`` for
span thresholds) so results never depend on the order of the systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple

from .corpus import EntitySpan
from .errors import EmptyEnsemble, InvalidSequence, TokenizationMismatch, UnknownDocument
from .tagcodec import OUTSIDE, TO_B, TagSequence, decode_iob, is_valid_iob, repair_tags

PREFER_O = "prefer_o"
LEXICOGRAPHIC = "lexicographic"


@dataclass(frozen=True)
class PredictionSet:
    """One system's tag sequences for a corpus, with its voting weight."""

    system_id: str
    predictions: Dict[str, TagSequence]
    weight: float = 1.0
    repaired: int = field(default=0, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.weight) and self.weight >= 0):
            raise ValueError(f"{self.system_id}: weight must be finite and non-negative, got {self.weight}")
        for doc_id, seq in self.predictions.items():
            if not is_valid_iob(seq.tags):
                raise InvalidSequence(f"{self.system_id}/{doc_id}: predictions are not valid IOB2")

    def with_weight(self, weight: float) -> "PredictionSet":
        return PredictionSet(self.system_id, self.predictions, weight, self.repaired)


def _check_ensemble(sets: Sequence[PredictionSet]) -> None:
    if not sets:
        raise EmptyEnsemble("no prediction sets to combine")
    if not any(s.weight > 0 for s in sets):
        raise EmptyEnsemble("every system has weight 0")


def weighted_vote(votes: Sequence[Tuple[str, float]], tie_policy: str = PREFER_O) -> str:
    """Pick the tag with the largest summed weight from ``(tag, weight)`` votes.

    Ties go to ``O`` under ``prefer_o`` when ``O`` is among the tied tags,
    otherwise to the lexicographically smallest tag.
    """
    weights: Dict[str, List[float]] = {}
    for tag, w in votes:
        weights.setdefault(tag, []).append(w)
    totals = {tag: math.fsum(ws) for tag, ws in weights.items()}
    best = max(totals.values())
    tied = [tag for tag, total in totals.items() if total == best]
    if len(tied) == 1:
        return tied[0]
    if tie_policy == PREFER_O and OUTSIDE in tied:
        return OUTSIDE
    return min(tied)


def vote_tokens(sets: Sequence[PredictionSet], tie_policy: str = PREFER_O) -> Dict[str, TagSequence]:
    """Token-level weighted majority vote.

    Every set must cover the same documents with identical tokens. The
    per-token winners are passed through ``repair_tags(to_b)`` so the result
    is valid IOB2 even when the argmax leaves an orphan ``I-``.

    Raises:
        EmptyEnsemble: no sets, or no set with positive weight.
        TokenizationMismatch: differing documents or tokens across sets.
    """
    if tie_policy not in (PREFER_O, LEXICOGRAPHIC):
        raise ValueError(f"tie_policy must be 'prefer_o' or 'lexicographic', got {tie_policy!r}")
    _check_ensemble(sets)
    doc_ids = set(sets[0].predictions)
    for s in sets[1:]:
        if set(s.predictions) != doc_ids:
            raise TokenizationMismatch(
                f"{s.system_id} covers different documents than {sets[0].system_id}"
            )
    out: Dict[str, TagSequence] = {}
    for doc_id in sorted(doc_ids):
        seqs = [s.predictions[doc_id] for s in sets]
        tokens = seqs[0].tokens
        for s, seq in zip(sets, seqs):
            if seq.tokens != tokens:
                raise TokenizationMismatch(f"{s.system_id}/{doc_id}: tokens differ from {sets[0].system_id}")
        weights = [s.weight for s in sets]
        raw = []
        for column in zip(*(seq.tags for seq in seqs)):
            if all(tag == column[0] for tag in column):
                raw.append(column[0])
            else:
                raw.append(weighted_vote(list(zip(column, weights)), tie_policy))
        tags, _ = repair_tags(raw, TO_B)
        out[doc_id] = TagSequence(doc_id, tokens, tuple(tags))
    return out


def _priority(item: Tuple[Fraction, EntitySpan]):
    support, span = item
    return (-support, span.start, span.end, span.label)


def vote_spans(
    sets: Sequence[PredictionSet],
    texts: Mapping[str, str],
    threshold: float = 0.5,
) -> Dict[str, List[EntitySpan]]:
    """Span-level weighted vote.

    A candidate ``(start, end, label)`` survives when the weight of the
    systems predicting exactly that span is strictly greater than
    ``threshold * total_weight``, or equals the total weight (so
    ``threshold=1`` means unanimity). The default 0.5 is a strict majority:
    a span backed by exactly half the weight is dropped.

    Surviving candidates that overlap are resolved greedily: higher support
    first, then earlier start, then shorter, then label. Kept spans come back
    sorted with ``ann_id`` values ``V1, V2, ...`` per document.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    _check_ensemble(sets)
    total = sum((Fraction(s.weight) for s in sets), Fraction(0))
    cut = Fraction(threshold) * total
    doc_ids = sorted(set().union(*(s.predictions for s in sets)))
    out: Dict[str, List[EntitySpan]] = {}
    for doc_id in doc_ids:
        if doc_id not in texts:
            raise UnknownDocument(f"no text for document {doc_id!r}")
        text = texts[doc_id]
        support: Dict[Tuple[int, int, str], Fraction] = {}
        example: Dict[Tuple[int, int, str], EntitySpan] = {}
        for s in sets:
            seq = s.predictions.get(doc_id)
            if seq is None:
                continue
            for span in {sp.key: sp for sp in decode_iob(seq, text)}.values():
                support[span.key] = support.get(span.key, Fraction(0)) + Fraction(s.weight)
                example.setdefault(span.key, span)
        candidates = [
            (w, example[key]) for key, w in support.items() if w > 0 and (w > cut or w == total)
        ]
        candidates.sort(key=_priority)
        kept: List[EntitySpan] = []
        for _, span in candidates:
            if all(span.end <= k.start or k.end <= span.start for k in kept):
                kept.append(span)
        kept.sort(key=lambda sp: sp.key)
        out[doc_id] = [
            EntitySpan(doc_id, f"V{i}", sp.label, sp.start, sp.end, sp.snippet)
            for i, sp in enumerate(kept, start=1)
        ]
    return out
