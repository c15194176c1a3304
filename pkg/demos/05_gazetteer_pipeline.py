"""
A full run on the toy corpus
============================

Split, train a dictionary tagger on the training half, tag the held-out
half, vote three copies together and score. The same chain is available
from the command line (see the README).
"""

from clinspan import SplitSpec, evaluate_strict, load_corpus, split_corpus, tag_with_gazetteer, train_gazetteer
from clinspan.ensemble import vote_spans
from clinspan.pipeline import spans_to_prediction_set, toy_corpus_dir

root = toy_corpus_dir()
corpus = load_corpus(root / "texts", root / "annotations.tsv")
train, val = split_corpus(corpus, SplitSpec(train_fraction=0.75, seed=42))
print("validation documents:", val.doc_ids)

gaz = train_gazetteer(train)
print(len(gaz), "entries; 'Dolor Abdominal' known:", "Dolor Abdominal" in gaz)

predicted = {d.doc_id: tag_with_gazetteer(d.text, gaz, d.doc_id) for d in val}
texts = val.texts()
copies = [spans_to_prediction_set(f"copy{i}", predicted, texts) for i in range(3)]
voted = vote_spans(copies, texts)

report = evaluate_strict(val, voted)
print(f"P={report.precision:.3f} R={report.recall:.3f} F1={report.f1:.3f}")
for doc_id, (tp, fp, fn) in report.per_doc.items():
    print(f"  {doc_id}: tp={tp} fp={fp} fn={fn}")
