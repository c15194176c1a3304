"""Span-level precision, recall and F1, micro-averaged over documents."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Tuple

from .corpus import AnnotatedCorpus, EntitySpan
from .errors import UnknownDocument

STRICT = "strict"
OVERLAP = "overlap"

Key = Tuple[int, int, str]


def f1_from_pr(p: float, r: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def prf(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    """Precision, recall, F1 from counts.

    Nothing predicted and nothing to find scores 1.0 on all three; a single
    zero denominator gives 0.0 for that metric.
    """
    if tp + fp == 0 and tp + fn == 0:
        return 1.0, 1.0, 1.0
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return p, r, f1_from_pr(p, r)


@dataclass(frozen=True)
class EvalReport:
    mode: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    per_doc: Dict[str, Tuple[int, int, int]] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, mode: str, per_doc: Mapping[str, Tuple[int, int, int]]) -> "EvalReport":
        tp = sum(c[0] for c in per_doc.values())
        fp = sum(c[1] for c in per_doc.values())
        fn = sum(c[2] for c in per_doc.values())
        p, r, f = prf(tp, fp, fn)
        return cls(mode, tp, fp, fn, p, r, f, dict(sorted(per_doc.items())))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_doc": {
                doc_id: {"tp": tp, "fp": fp, "fn": fn} for doc_id, (tp, fp, fn) in sorted(self.per_doc.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def _keys(spans: Iterable[EntitySpan]) -> set:
    return {s.key for s in spans}


def _paired(gold: AnnotatedCorpus, pred: Mapping[str, Iterable[EntitySpan]]):
    unknown = sorted(set(pred) - set(gold.documents))
    if unknown:
        raise UnknownDocument(f"predictions for documents not in the gold corpus: {unknown}")
    for doc_id in gold.documents:
        yield doc_id, gold.spans_for(doc_id), pred.get(doc_id, ())


def evaluate_strict(gold: AnnotatedCorpus, pred: Mapping[str, Iterable[EntitySpan]]) -> EvalReport:
    """Exact-match scoring on ``(doc_id, start, end, label)``.

    Both sides are de-duplicated on ``(start, end, label)`` first. Documents
    missing from ``pred`` count as having no predictions.
    """
    per_doc = {}
    for doc_id, g, p in _paired(gold, pred):
        gk, pk = _keys(g), _keys(p)
        tp = len(gk & pk)
        per_doc[doc_id] = (tp, len(pk) - tp, len(gk) - tp)
    return EvalReport.from_counts(STRICT, per_doc)


def _overlap_counts(gold: List[Key], pred: List[Key]) -> Tuple[int, int, int]:
    used = [False] * len(gold)
    tp = 0
    for start, end, label in pred:
        for i, (gs, ge, gl) in enumerate(gold):
            if not used[i] and gl == label and gs < end and start < ge:
                used[i] = True
                tp += 1
                break
    return tp, len(pred) - tp, len(gold) - tp


def evaluate_overlap(gold: AnnotatedCorpus, pred: Mapping[str, Iterable[EntitySpan]]) -> EvalReport:
    """Lenient scoring: same-label spans match if their intervals intersect.

    Matching is one-to-one and greedy. Predictions are taken in
    ``(start, end)`` order and each claims the first unclaimed gold span
    (also in ``(start, end)`` order) that it intersects.
    """
    per_doc = {}
    for doc_id, g, p in _paired(gold, pred):
        per_doc[doc_id] = _overlap_counts(sorted(_keys(g)), sorted(_keys(p)))
    return EvalReport.from_counts(OVERLAP, per_doc)


def evaluate(gold: AnnotatedCorpus, pred: Mapping[str, Iterable[EntitySpan]], mode: str = STRICT) -> EvalReport:
    if mode == STRICT:
        return evaluate_strict(gold, pred)
    if mode == OVERLAP:
        return evaluate_overlap(gold, pred)
    raise ValueError(f"mode must be 'strict' or 'overlap', got {mode!r}")


# --------------------------------------------------------------------------
# report rendering


def format_table(reports: Mapping[str, EvalReport]) -> str:
    """Fixed-width summary, one row per system."""
    width = max([len("system")] + [len(name) for name in reports])
    head = f"{'system':<{width}}  {'mode':<7}  {'tp':>6}  {'fp':>6}  {'fn':>6}  {'P':>6}  {'R':>6}  {'F1':>6}"
    lines = [head, "-" * len(head)]
    for name, r in reports.items():
        lines.append(
            f"{name:<{width}}  {r.mode:<7}  {r.tp:>6}  {r.fp:>6}  {r.fn:>6}  "
            f"{r.precision:>6.4f}  {r.recall:>6.4f}  {r.f1:>6.4f}"
        )
    return "\n".join(lines) + "\n"


def format_tsv(reports: Mapping[str, EvalReport]) -> str:
    """One row per system: ``system  precision  recall  f1`` (4 decimals)."""
    lines = ["system\tprecision\trecall\tf1"]
    for name, r in reports.items():
        lines.append(f"{name}\t{r.precision:.4f}\t{r.recall:.4f}\t{r.f1:.4f}")
    return "\n".join(lines) + "\n"
