"""Acceptance criteria, one test each.

Every test prints a ``PASS``/``FAIL`` line (also collected into the pytest
terminal summary) and then asserts, so a failure is both reported and red.
"""

import functools
import gc
import json
import logging
import time
from pathlib import Path

from clinspan.cli import main
from clinspan.corpus import DocumentText, EntitySpan, bind_corpus, parse_annotation_table, write_annotation_table
from clinspan.ensemble import PredictionSet, vote_spans, vote_tokens
from clinspan.errors import ClinspanError
from clinspan.metrics import evaluate_strict, f1_from_pr
from clinspan.pipeline import (
    SplitSpec,
    decode_corpus,
    encode_corpus,
    format_predictions,
    parse_predictions,
    split_corpus,
    tokenize_corpus,
)
from clinspan.tagcodec import TagSequence, decode_iob, encode_iob, format_tag_file, is_valid_iob, parse_tag_file
from clinspan.tokenizer import Token, format_token_offsets, parse_token_offsets, tokenize

from helpers import (
    ACCEPTANCE_LINES,
    REFERENCE_SCORES,
    make_rng,
    oracle_prf,
    oracle_strict_counts,
    random_aligned_spans,
    random_document,
    random_ensemble,
    random_text,
    run_golden_chain,
)

GOLDEN = Path(__file__).parent / "golden" / "toy_report.json"


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            detail, status = "", "FAIL"
            try:
                detail = fn(*args, **kwargs) or ""
                status = "PASS"
            except AssertionError as exc:
                detail = str(exc).splitlines()[0] if str(exc) else "assertion failed"
                raise
            finally:
                line = f"{status} criterion {number}: {title} ({time.perf_counter() - t0:.2f}s) {detail}".rstrip()
                ACCEPTANCE_LINES.append(line)
                print(line)
        return run
    return wrap


# --------------------------------------------------------------------------


@criterion(1, "F1 from reported P/R within 0.01 on all 8 reference rows")
def test_1_table_consistency():
    worst = max(abs(f1_from_pr(p, r) - f1) for _, _, p, r, f1 in REFERENCE_SCORES)
    assert len(REFERENCE_SCORES) == 8
    assert worst <= 0.01, f"worst deviation {worst:.4f}"
    return f"worst deviation {worst:.4f}"


@criterion(2, "round trips: decode(encode), annotation table, prediction files")
def test_2_round_trips():
    t0 = time.perf_counter()
    rng = make_rng(1002)
    docs, spans, n = [], [], 0
    for i in range(1000):
        doc, doc_spans = random_document(rng, f"doc{i:04d}", labels=("SINTOMA", "ENFERMEDAD"))
        tokens = tokenize(doc.text)
        seq = encode_iob(tokens, doc_spans, doc_id=doc.doc_id)
        decoded = decode_iob(seq, doc.text)
        assert [(s.start, s.end, s.label, s.snippet) for s in decoded] == [
            (s.start, s.end, s.label, s.snippet) for s in doc_spans
        ], f"decode(encode) differs on {doc.doc_id}"
        docs.append(doc)
        spans += doc_spans
        n += len(doc_spans)
    corpus = bind_corpus(docs, spans)

    table = write_annotation_table(corpus)
    reparsed = parse_annotation_table(table)
    assert sorted(reparsed) == sorted(spans), "annotation table round trip"
    assert write_annotation_table(bind_corpus(docs, reparsed)) == table

    texts = corpus.texts()
    pset = PredictionSet("sys", encode_corpus(corpus))
    for fmt in ("token_tags", "span_tsv"):
        data = format_predictions(pset, fmt, texts)
        back = parse_predictions(data, "sys", fmt, texts)
        assert back.predictions == pset.predictions, f"{fmt} round trip"
        assert format_predictions(back, fmt, texts) == data
    elapsed = time.perf_counter() - t0
    assert elapsed < 10, f"took {elapsed:.2f}s"
    return f"1000 documents, {n} spans"


@criterion(3, "strict metric equals all-pairs oracle on 1000 random pairs")
def test_3_metric_oracle():
    t0 = time.perf_counter()
    rng = make_rng(1003)
    text = "x" * 40
    docs = [DocumentText("d", text)]
    def random_spans(prefix):
        out = []
        for j in range(rng.randint(0, 10)):
            a = rng.randint(0, 8)
            b = rng.randint(a + 1, 10)
            out.append(EntitySpan("d", f"{prefix}{j}", rng.choice(["SINTOMA", "X"]), a, b, text[a:b]))
        return out

    for _ in range(1000):
        gold, pred = random_spans("T"), random_spans("P")
        rep = evaluate_strict(bind_corpus(docs, gold), {"d": pred})
        counts = oracle_strict_counts(gold, pred)
        assert (rep.tp, rep.fp, rep.fn) == counts, f"counts {(rep.tp, rep.fp, rep.fn)} != {counts}"
        for got, want in zip((rep.precision, rep.recall, rep.f1), oracle_prf(*counts)):
            assert abs(got - want) <= 1e-12
    elapsed = time.perf_counter() - t0
    assert elapsed < 10, f"took {elapsed:.2f}s"


@criterion(4, "voting laws on 1000 random ensembles and the 3-3 tie")
def test_4_voting_laws():
    t0 = time.perf_counter()
    rng = make_rng(1004)
    for _ in range(1000):
        k = rng.randint(1, 6)
        texts, sets = random_ensemble(rng, k=k, integer_weights=True)
        policy = rng.choice(["prefer_o", "lexicographic"])
        out = vote_tokens(sets, policy)
        assert all(is_valid_iob(seq.tags) for seq in out.values()), "invalid IOB output"

        clones = [PredictionSet(f"c{i}", sets[0].predictions, rng.choice([0.5, 1.0, 2.0])) for i in range(k)]
        assert vote_tokens(clones, policy) == sets[0].predictions, "unanimity"

        shuffled = list(sets)
        rng.shuffle(shuffled)
        assert vote_tokens(shuffled, policy) == out, "permutation"
        assert vote_spans(shuffled, texts) == vote_spans(sets, texts), "span-level permutation"

        duplicated = [s.with_weight(1.0) for s in sets for _ in range(int(s.weight))]
        assert vote_tokens(duplicated, policy) == out, "weight duplication"

        unweighted = [s.with_weight(1.0) for s in sets]
        c = rng.choice([0.3, 2.5, 7.0])
        equal = [s.with_weight(c) for s in sets]
        assert vote_tokens(equal, policy) == vote_tokens(unweighted, policy), "equal weights"

    tok = (Token(0, 5, "dolor"),)
    tie = [PredictionSet(f"s{i}", {"d": TagSequence("d", tok, (tag,))}) for i, tag in enumerate(["B-SINTOMA"] * 3 + ["O"] * 3)]
    assert vote_tokens(tie, "prefer_o")["d"].tags == ("O",), "3-3 tie"
    elapsed = time.perf_counter() - t0
    assert elapsed < 10, f"took {elapsed:.2f}s"


@criterion(5, "golden toy-corpus run matches the committed report byte for byte")
def test_5_golden_run(tmp_path):
    first = run_golden_chain(main, tmp_path / "a")
    second = run_golden_chain(main, tmp_path / "b")
    assert first == second, "non-deterministic report"
    assert first == GOLDEN.read_bytes(), "report differs from golden"
    per_doc = json.loads(first)["per_doc"]
    # counted by hand from the validation gold and the training vocabulary
    hand = {"toy04": (2, 0, 1), "toy09": (1, 0, 1), "toy17": (0, 0, 2)}
    for doc_id, (tp, fp, fn) in hand.items():
        assert per_doc[doc_id] == {"tp": tp, "fp": fp, "fn": fn}, doc_id
    return "f1 {:.4f}".format(json.loads(first)["f1"])


@criterion(6, "744 documents at 0.95 split 707/37, identical over 5 reruns")
def test_6_split_arithmetic():
    corpus = bind_corpus([DocumentText(f"doc{i:04d}", "") for i in range(744)], [])
    runs = [split_corpus(corpus, SplitSpec(0.95, 42)) for _ in range(5)]
    for train, val in runs:
        assert (len(train), len(val)) == (707, 37)
        assert (train.doc_ids, val.doc_ids) == (runs[0][0].doc_ids, runs[0][1].doc_ids)


FUZZ_TEXTS = {"d": "Paciente con dolor torácico, fiebre.", "e": "tos"}


def _fuzz_seeds():
    spans = (
        b"filename\tann_id\tlabel\tstart_span\tend_span\ttext\n"
        + "d\tT1\tSINTOMA\t13\t27\tdolor torácico\nd\tT2\tSINTOMA\t29\t35\tfiebre\ne\tT1\tS\t0\t3\ttos\n".encode()
    )
    tags = format_tag_file({d: encode_iob(tokenize(t), [], doc_id=d) for d, t in FUZZ_TEXTS.items()})
    offsets = format_token_offsets({d: tokenize(t) for d, t in FUZZ_TEXTS.items()})
    return [spans, tags, offsets]


def _mutate(rng, data):
    data = bytearray(data)
    for _ in range(rng.randint(1, 4)):
        op = rng.randrange(4)
        pos = rng.randint(0, len(data))
        if op == 0 and data:
            del data[pos:pos + rng.randint(1, 8)]
        elif op == 1:
            data[pos:pos] = bytes([rng.choice(b"\t\n\r-0123456789#\xff\xc3 ")])
        elif op == 2 and pos < len(data):
            data[pos] = rng.randrange(256)
        else:
            data = data[:pos]
    return bytes(data)


PARSERS = [
    parse_annotation_table,
    parse_tag_file,
    lambda b: parse_tag_file(b, FUZZ_TEXTS),
    lambda b: parse_token_offsets(b, FUZZ_TEXTS),
    lambda b: parse_predictions(b, "fuzz", "span_tsv", FUZZ_TEXTS),
    lambda b: parse_predictions(b, "fuzz", "token_tags", FUZZ_TEXTS),
]


@criterion(7, "100000 fuzzed inputs raise only structured errors")
def test_7_fuzz():
    rng = make_rng(1007)
    seeds = _fuzz_seeds()
    structured = accepted = 0
    logging.getLogger("clinspan").setLevel(logging.ERROR)
    try:
        for i in range(100_000):
            if i % 4 == 0:
                data = bytes(rng.randrange(256) for _ in range(rng.randint(0, 40)))
            else:
                data = _mutate(rng, rng.choice(seeds))
            parser = PARSERS[i % len(PARSERS)]
            try:
                parser(data)
                accepted += 1
            except ClinspanError:
                structured += 1
            except Exception as exc:
                raise AssertionError(f"{type(exc).__name__} on input {data!r}") from exc
    finally:
        logging.getLogger("clinspan").setLevel(logging.NOTSET)
    return f"{structured} rejected, {accepted} accepted"


@criterion(8, "tokenize + encode + strict evaluate of 10000 documents (~5 MB) under 5 s")
def test_8_throughput():
    rng = make_rng(1008)
    docs, spans = [], []
    for i in range(10_000):
        text = random_text(rng, 80)
        doc_id = f"d{i:05d}"
        docs.append(DocumentText(doc_id, text))
        spans += random_aligned_spans(rng, doc_id, text)
    corpus = bind_corpus(docs, spans)
    size = sum(len(d.text.encode("utf-8")) for d in docs)
    assert 4_000_000 <= size <= 6_000_000, f"corpus is {size} bytes"
    gc.collect()

    t0 = time.perf_counter()
    tokens = tokenize_corpus(corpus)
    t1 = time.perf_counter()
    seqs = encode_corpus(corpus, tokens=tokens)
    t2 = time.perf_counter()
    predicted = decode_corpus(seqs, corpus.texts())
    t3 = time.perf_counter()
    report = evaluate_strict(corpus, predicted)
    t4 = time.perf_counter()
    elapsed = t4 - t0

    assert report.f1 == 1.0
    assert elapsed < 5, f"took {elapsed:.2f}s"
    # the parallel knob (workers > 1) must give the same answer
    sample = corpus.subset(corpus.doc_ids[:500])
    assert tokenize_corpus(sample, workers=2) == tokenize_corpus(sample)
    phases = f"tokenize {t1 - t0:.2f}, encode {t2 - t1:.2f}, decode {t3 - t2:.2f}, evaluate {t4 - t3:.2f}"
    return f"{size / 1e6:.1f} MB, {len(spans)} spans in {elapsed:.2f}s ({phases})"
