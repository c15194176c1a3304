"""
From spans to IOB2 tags and back
================================
"""

from clinspan import EntitySpan, decode_iob, encode_iob, repair_tags, tokenize

text = "Paciente con dolor torácico agudo y fiebre"
tokens = tokenize(text)
spans = [
    EntitySpan("d", "T1", "SINTOMA", 13, 27, "dolor torácico"),
    EntitySpan("d", "T2", "SINTOMA", 36, 42, "fiebre"),
]

seq = encode_iob(tokens, spans, doc_id="d")
for tok, tag in zip(seq.tokens, seq.tags):
    print(f"{tok.surface:<10} {tag}")

# decoding recovers the same offsets (ann_ids are renumbered P1, P2, ...)
print(decode_iob(seq, text))

# a boundary inside a token: strict refuses, clip widens and reports
misaligned = [EntitySpan("d", "T1", "SINTOMA", 15, 27, "lor torácico")]
diagnostics = []
clipped = encode_iob(tokens, misaligned, "clip", doc_id="d", diagnostics=diagnostics)
print(clipped.tags)
print(diagnostics[0].message)

# an I- tag with nothing to continue
print(repair_tags(["O", "I-SINTOMA", "I-SINTOMA"], "to_b"))
print(repair_tags(["O", "I-SINTOMA", "I-SINTOMA"], "drop"))
