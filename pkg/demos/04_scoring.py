"""
Strict and overlap scoring
==========================
"""

from clinspan import DocumentText, EntitySpan, bind_corpus, evaluate_overlap, evaluate_strict, f1_from_pr

text = "Paciente con dolor torácico agudo y fiebre alta"
gold = bind_corpus(
    [DocumentText("d", text)],
    [EntitySpan("d", "T1", "SINTOMA", 13, 27, "dolor torácico"), EntitySpan("d", "T2", "SINTOMA", 36, 47, "fiebre alta")],
)
pred = {"d": [
    EntitySpan("d", "P1", "SINTOMA", 13, 33, "dolor torácico agudo"),
    EntitySpan("d", "P2", "SINTOMA", 36, 47, "fiebre alta"),
]}

strict = evaluate_strict(gold, pred)
overlap = evaluate_overlap(gold, pred)
print(f"strict:  P={strict.precision:.2f} R={strict.recall:.2f} F1={strict.f1:.2f}")
print(f"overlap: P={overlap.precision:.2f} R={overlap.recall:.2f} F1={overlap.f1:.2f}")
print(strict.to_json())

# F1 is the harmonic mean: P=0.70, R=0.57 gives about 0.63
print(round(f1_from_pr(0.70, 0.57), 4))
