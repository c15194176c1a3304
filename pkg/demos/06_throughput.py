"""
Bulk processing and the workers knob
====================================

Tokenize and encode a synthetic corpus serially and with a process pool.
Output is identical either way; the pool only pays off with several cores
and large corpora.
"""

import os
import random
import time

from clinspan import DocumentText, EntitySpan, bind_corpus, evaluate_strict
from clinspan.pipeline import decode_corpus, encode_corpus, tokenize_corpus

rng = random.Random(0)
words = ["dolor", "torácico", "fiebre", "tos", "paciente", "con", "sin", "y", "38.5", "ºC"]
docs, spans = [], []
for i in range(2000):
    parts, pos = [], 0
    for j in range(60):
        w = rng.choice(words)
        if rng.random() < 0.1:
            spans.append(EntitySpan(f"d{i}", f"T{j}", "SINTOMA", pos, pos + len(w), w))
        parts.append(w)
        pos += len(w) + 1
    docs.append(DocumentText(f"d{i}", " ".join(parts)))
corpus = bind_corpus(docs, spans)

for workers in (1, min(4, os.cpu_count() or 1)):
    t0 = time.perf_counter()
    tokens = tokenize_corpus(corpus, workers=workers)
    seqs = encode_corpus(corpus, workers=workers, tokens=tokens)
    report = evaluate_strict(corpus, decode_corpus(seqs, corpus.texts()))
    print(f"workers={workers}: {time.perf_counter() - t0:.2f}s, F1={report.f1}")
