"""Span-based clinical NER toolkit: standoff annotations, IOB2 codecs,
weighted majority voting and span-level scoring."""

__version__ = "0.1.0"

from .corpus import (
    AnnotatedCorpus,
    DocumentText,
    EntitySpan,
    bind_corpus,
    load_corpus,
    parse_annotation_table,
    read_annotation_table,
    read_text_dir,
    write_annotation_table,
)
from .ensemble import PredictionSet, vote_spans, vote_tokens
from .errors import ClinspanError, Diagnostic
from .metrics import EvalReport, evaluate_overlap, evaluate_strict, f1_from_pr
from .pipeline import (
    Gazetteer,
    SplitSpec,
    read_predictions,
    split_corpus,
    tag_with_gazetteer,
    train_gazetteer,
    write_predictions,
)
from .tagcodec import TagSequence, decode_iob, encode_iob, repair_tags
from .tokenizer import Token, tokenize

__all__ = [
    "AnnotatedCorpus",
    "bind_corpus",
    "ClinspanError",
    "decode_iob",
    "Diagnostic",
    "DocumentText",
    "encode_iob",
    "EntitySpan",
    "EvalReport",
    "evaluate_overlap",
    "evaluate_strict",
    "f1_from_pr",
    "Gazetteer",
    "load_corpus",
    "parse_annotation_table",
    "PredictionSet",
    "read_annotation_table",
    "read_predictions",
    "read_text_dir",
    "repair_tags",
    "split_corpus",
    "SplitSpec",
    "tag_with_gazetteer",
    "TagSequence",
    "Token",
    "tokenize",
    "train_gazetteer",
    "vote_spans",
    "vote_tokens",
    "write_annotation_table",
    "write_predictions",
]
