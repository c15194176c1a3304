"""
Reading a standoff corpus
=========================

Load the bundled toy corpus, look at one document and its spans, and see
how the tokenizer lines up with the character offsets.
"""

from clinspan import load_corpus, tokenize
from clinspan.pipeline import toy_corpus_dir

root = toy_corpus_dir()
corpus = load_corpus(root / "texts", root / "annotations.tsv")
print(f"{len(corpus)} documents, {corpus.n_spans} spans")

# offsets are code points into the text, half-open
doc = corpus.documents["toy01"]
print(doc.text)
for span in corpus.spans_for("toy01"):
    print(f"  {span.ann_id} {span.label} [{span.start}, {span.end}) {doc.text[span.start:span.end]!r}")

# edge punctuation is split off; interior punctuation stays attached
for tok in tokenize("Fiebre de 38.5 ºC, tos post-operatorio (c/d)."):
    print(f"  {tok.start:>3} {tok.end:>3} {tok.surface}")

# a bad snippet is fatal by default; lenient mode drops it and says why
from clinspan import DocumentText, EntitySpan, bind_corpus

docs = [DocumentText("d", "dolor y fiebre")]
spans = [EntitySpan("d", "T1", "SINTOMA", 0, 5, "dolr"), EntitySpan("d", "T2", "SINTOMA", 8, 14, "fiebre")]
lenient = bind_corpus(docs, spans, "lenient")
print(lenient.n_spans, "kept;", lenient.diagnostics[0].message)
