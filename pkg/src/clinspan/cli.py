"""Command-line entry point: ``clinspan <subcommand> ...``.

Exit status is 0 on success, 1 on a validation or format error and 2 on a
usage error. ``--config FILE`` reads a TOML file whose top-level keys apply
to every subcommand and whose ``[subcommand]`` tables apply to one; keys are
the long flag names (``text-dir`` or ``text_dir``). Command-line flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .corpus import (
    LENIENT,
    STRICT,
    DocumentText,
    bind_corpus,
    format_annotation_table,
    group_spans,
    load_corpus,
    parse_annotation_table,
    read_annotation_table,
    read_text_dir,
)
from .ensemble import PREFER_O, LEXICOGRAPHIC, PredictionSet, vote_spans, vote_tokens
from .errors import ClinspanError, Diagnostic
from .metrics import evaluate, format_table, format_tsv
from .pipeline import (
    SPAN_TSV,
    TOKEN_TAGS,
    SplitSpec,
    encode_corpus,
    format_predictions,
    read_predictions,
    sniff_format,
    spans_to_prediction_set,
    split_corpus,
    tag_corpus,
    tokenize_corpus,
    train_gazetteer,
)
from .tagcodec import CLIP, DROP, TO_B, decode_iob, format_tag_file, parse_tag_file
from .tokenizer import format_token_offsets, parse_token_offsets

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("clinspan")

DOCS_SUFFIX = ".docs"


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# helpers


def _emit(data: bytes, out: Optional[str]) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _read_doc_list(path: Optional[str]) -> Optional[List[str]]:
    if not path:
        return None
    return [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def _load_docs(text_dir: str, docs_file: Optional[str]) -> List[DocumentText]:
    docs = read_text_dir(text_dir)
    wanted = _read_doc_list(docs_file)
    if wanted is None:
        return docs
    known = {d.doc_id for d in docs}
    missing = sorted(set(wanted) - known)
    if missing:
        raise ClinspanError(f"{docs_file}: documents not found in {text_dir}: {missing}")
    wanted_set = set(wanted)
    return [d for d in docs if d.doc_id in wanted_set]


def _read_tokens(path: Optional[str], texts) -> Optional[dict]:
    if not path:
        return None
    return parse_token_offsets(Path(path).read_bytes(), texts)


def _parse_weights(items: Sequence[str]) -> Dict[str, float]:
    weights = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--weight expects ID=W, got {item!r}")
        try:
            weights[key] = float(value)
        except ValueError:
            raise UsageError(f"--weight {item!r}: {value!r} is not a number") from None
    return weights


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) in (None, [], ""):
            raise UsageError(f"{args.command}: --{name.replace('_', '-')} is required")


def _print_diagnostics(diags: Sequence[Diagnostic]) -> None:
    for d in diags:
        print(f"warning: {d}", file=sys.stderr)


# --------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    _require(args, "text_dir", "ann")
    corpus = load_corpus(args.text_dir, args.ann, LENIENT if args.lenient else STRICT)
    _print_diagnostics(corpus.diagnostics)
    print(f"{len(corpus)} documents, {corpus.n_spans} spans, {len(corpus.diagnostics)} dropped")
    return 0


def cmd_tokenize(args) -> int:
    _require(args, "text_dir")
    docs = _load_docs(args.text_dir, args.docs)
    _emit(format_token_offsets(tokenize_corpus(docs, workers=args.workers)), args.out)
    return 0


def cmd_split(args) -> int:
    _require(args, "text_dir", "ann", "out_train", "out_val")
    corpus = load_corpus(args.text_dir, args.ann)
    train, val = split_corpus(corpus, SplitSpec(args.fraction, args.seed))
    for part, path in ((train, args.out_train), (val, args.out_val)):
        Path(path).write_bytes(format_annotation_table(part.all_spans()))
        Path(path + DOCS_SUFFIX).write_text("".join(d + "\n" for d in part.doc_ids), encoding="utf-8")
    print(f"train: {len(train)} documents, {train.n_spans} spans -> {args.out_train}")
    print(f"validation: {len(val)} documents, {val.n_spans} spans -> {args.out_val}")
    return 0


def cmd_encode(args) -> int:
    _require(args, "text_dir", "ann")
    docs = _load_docs(args.text_dir, args.docs)
    corpus = bind_corpus(docs, read_annotation_table(args.ann))
    tokens = _read_tokens(args.tokens, corpus.texts())
    diags: List[Diagnostic] = []
    seqs = encode_corpus(corpus, args.overlap, workers=args.workers, diagnostics=diags, tokens=tokens)
    _print_diagnostics(diags)
    _emit(format_tag_file(seqs), args.out)
    return 0


def cmd_decode(args) -> int:
    _require(args, "text_dir", "tags")
    texts = {d.doc_id: d.text for d in read_text_dir(args.text_dir)}
    seqs = parse_tag_file(Path(args.tags).read_bytes(), texts)
    spans = [s for doc_id in sorted(seqs) for s in decode_iob(seqs[doc_id], texts[doc_id], args.repair)]
    _emit(format_annotation_table(spans), args.out)
    return 0


def cmd_baseline(args) -> int:
    _require(args, "train_ann", "text_dir", "out")
    all_docs = read_text_dir(args.text_dir)
    train = bind_corpus(all_docs, read_annotation_table(args.train_ann))
    gaz = train_gazetteer(train)
    targets = _load_docs(args.text_dir, args.docs)
    predicted = tag_corpus(targets, gaz)
    texts = {d.doc_id: d.text for d in targets}
    if args.format == TOKEN_TAGS:
        data = format_predictions(spans_to_prediction_set("baseline", predicted, texts), TOKEN_TAGS)
    else:
        data = format_annotation_table(s for spans in predicted.values() for s in spans)
    _emit(data, args.out)
    n = sum(len(v) for v in predicted.values())
    print(f"gazetteer: {len(gaz)} entries; tagged {len(targets)} documents, {n} spans", file=sys.stderr)
    return 0


def _read_prediction_sets(args, texts) -> List[PredictionSet]:
    weights = _parse_weights(args.weight)
    tokens = _read_tokens(args.tokens, texts)
    sets = []
    for path in args.pred:
        system_id = Path(path).stem
        sets.append(read_predictions(path, args.pred_format, texts, system_id, weights.get(system_id, 1.0), tokens=tokens))
    unused = set(weights) - {s.system_id for s in sets}
    if unused:
        raise UsageError(f"--weight given for unknown systems: {sorted(unused)}")
    return sets


def cmd_vote(args) -> int:
    _require(args, "pred", "text_dir", "out")
    docs = _load_docs(args.text_dir, args.docs)
    texts = {d.doc_id: d.text for d in docs}
    sets = _read_prediction_sets(args, texts)
    if args.level == "token":
        voted = PredictionSet("vote", vote_tokens(sets, args.tie))
        _emit(format_predictions(voted, args.format, texts), args.out)
    else:
        spans = vote_spans(sets, texts, args.threshold)
        if args.format == TOKEN_TAGS:
            voted = spans_to_prediction_set("vote", spans, texts, tokens=_read_tokens(args.tokens, texts))
            data = format_predictions(voted, TOKEN_TAGS)
        else:
            data = format_annotation_table(s for v in spans.values() for s in v)
        _emit(data, args.out)
    return 0


def _prediction_spans(path: str, fmt: Optional[str], texts) -> Dict[str, list]:
    data = Path(path).read_bytes()
    if (fmt or sniff_format(data)) == TOKEN_TAGS:
        seqs = parse_tag_file(data, texts)
        return {doc_id: decode_iob(seq, texts[doc_id], TO_B) for doc_id, seq in sorted(seqs.items())}
    return group_spans(parse_annotation_table(data))


def cmd_evaluate(args) -> int:
    _require(args, "gold", "pred", "text_dir")
    docs = _load_docs(args.text_dir, args.docs)
    gold = bind_corpus(docs, read_annotation_table(args.gold))
    texts = gold.texts()
    reports = {}
    for path in args.pred:
        reports[Path(path).stem] = evaluate(gold, _prediction_spans(path, args.pred_format, texts), args.mode)
    if args.json:
        if len(reports) == 1:
            out = next(iter(reports.values())).to_json()
        else:
            out = json.dumps({k: r.to_dict() for k, r in reports.items()}, indent=2, ensure_ascii=False) + "\n"
    elif args.tsv:
        out = format_tsv(reports)
    else:
        out = format_table(reports)
    _emit(out.encode("utf-8"), args.out)
    return 0


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clinspan", description="Span-based clinical NER toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="TOML file with default option values")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "check an annotation table against its texts")
    p.add_argument("--text-dir")
    p.add_argument("--ann")
    p.add_argument("--lenient", action="store_true", help="drop bad spans instead of failing")

    p = add("tokenize", cmd_tokenize, "write token offsets (doc_id, start, end)")
    p.add_argument("--text-dir")
    p.add_argument("--docs", help="file listing the doc_ids to process")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")

    p = add("split", cmd_split, "seeded train/validation split")
    p.add_argument("--text-dir")
    p.add_argument("--ann")
    p.add_argument("--fraction", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-train")
    p.add_argument("--out-val")

    for name, func, help_ in (
        ("encode", cmd_encode, "annotation table -> tag-sequence file"),
        ("decode", cmd_decode, "tag-sequence file -> annotation table"),
    ):
        p = add(name, func, help_)
        p.add_argument("--text-dir")
        p.add_argument("--ann")
        p.add_argument("--tags")
        p.add_argument("--docs")
        p.add_argument("--tokens", help="token offsets (doc_id, start, end) to use instead of the built-in tokenizer")
        p.add_argument("--repair", choices=[TO_B, DROP])
        p.add_argument("--overlap", choices=[STRICT, CLIP], default=STRICT)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out")

    p = add("baseline", cmd_baseline, "train a gazetteer and tag documents")
    p.add_argument("--train-ann")
    p.add_argument("--text-dir")
    p.add_argument("--docs", help="file listing the doc_ids to tag (default: all)")
    p.add_argument("--format", choices=[SPAN_TSV, TOKEN_TAGS], default=SPAN_TSV)
    p.add_argument("--out")

    p = add("vote", cmd_vote, "combine prediction files by weighted majority vote")
    p.add_argument("--pred", nargs="+")
    p.add_argument("--pred-format", choices=[SPAN_TSV, TOKEN_TAGS], help="default: detect per file")
    p.add_argument("--weight", action="append", default=[], metavar="ID=W")
    p.add_argument("--level", choices=["token", "span"], default="token")
    p.add_argument("--tie", choices=[PREFER_O, LEXICOGRAPHIC], default=PREFER_O)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--text-dir")
    p.add_argument("--docs")
    p.add_argument("--tokens", help="token offsets for re-encoding span_tsv predictions")
    p.add_argument("--format", choices=[SPAN_TSV, TOKEN_TAGS], default=SPAN_TSV)
    p.add_argument("--out")

    p = add("evaluate", cmd_evaluate, "score predictions against gold spans")
    p.add_argument("--gold")
    p.add_argument("--pred", nargs="+")
    p.add_argument("--pred-format", choices=[SPAN_TSV, TOKEN_TAGS])
    p.add_argument("--text-dir")
    p.add_argument("--docs", help="file listing the gold doc_ids (default: all texts)")
    p.add_argument("--mode", choices=["strict", "overlap"], default="strict")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--tsv", action="store_true")
    p.add_argument("--out")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config, "rb") as fh:
            config = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    command = next((a for a in rest if not a.startswith("-")), None)
    values = {k: v for k, v in config.items() if not isinstance(v, dict)}
    if command and isinstance(config.get(command), dict):
        values.update(config[command])
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if command in subparsers.choices:
        sp = subparsers.choices[command]
        dests = {a.dest for a in sp._actions}
        defaults = {}
        for key, value in values.items():
            dest = key.replace("-", "_")
            if dest not in dests:
                raise UsageError(f"config key {key!r} is not an option of {command!r}")
            defaults[dest] = value
        sp.set_defaults(**defaults)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"clinspan: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"clinspan {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ClinspanError, ValueError, OSError) as exc:
        print(f"clinspan {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
