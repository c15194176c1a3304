"""
Combining systems by weighted vote
==================================

Three made-up systems disagree on one sentence. Token-level voting picks a
tag per token; span-level voting keeps whole spans with enough support.
"""

from clinspan import EntitySpan, PredictionSet, decode_iob, encode_iob, tokenize, vote_spans, vote_tokens

text = "Refiere dolor torácico agudo desde ayer"
tokens = tokenize(text)


def system(name, offsets, weight=1.0):
    spans = [EntitySpan("d", f"T{i}", "SINTOMA", a, b, text[a:b]) for i, (a, b) in enumerate(offsets)]
    return PredictionSet(name, {"d": encode_iob(tokens, spans, doc_id="d")}, weight)


a = system("a", [(8, 22)])        # dolor torácico
b = system("b", [(8, 28)])        # dolor torácico agudo
c = system("c", [(14, 28)])       # torácico agudo

for sets in ([a, b, c], [a.with_weight(3.0), b, c]):
    voted = vote_tokens(sets)["d"]
    print([s.snippet for s in decode_iob(voted, text)], "weights", [s.weight for s in sets])

# span level: only exact spans count, overlaps go to the better supported one
print([s.snippet for s in vote_spans([a, b, c], {"d": text}, threshold=0.3)["d"]])
print([s.snippet for s in vote_spans([a, a.with_weight(2.0), b, c], {"d": text})["d"]])

# three for, three against: the tie goes to O under the default policy
six = [a] * 3 + [system("none", [])] * 3
print(vote_tokens(six)["d"].tags)
print(vote_tokens(six, "lexicographic")["d"].tags)
