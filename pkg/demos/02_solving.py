"""Deciding sentence sets and checking the models the solvers return.

Run with ``python demos/02_solving.py``.
"""

from nlsat.grammar import Vocabulary, parse
from nlsat.logic import translate
from nlsat.solver import ground_check, model_check, solve

vocab = Vocabulary.default()

unsat_set = ["Every scholar loves some artist", "Every artist is a musician",
             "Some scholar loves no musician"]
sat_set = ["Some scholar loves every musician", "Every musician is an artist",
           "Every artist loves some scholar"]

for texts in (unsat_set, sat_set):
    sentences = [parse(t, "V", vocab) for t in texts]
    verdict = solve(sentences, vocab=vocab)
    print(" / ".join(texts))
    print(f"  verdict: {verdict.status}  ({verdict.stats.get('strategy')}, {verdict.stats.get('nodes', 0)} nodes)")
    formulas = [translate(s, vocab) for s in sentences]
    if verdict.is_sat:
        # the certificate is a finite structure; the model checker evaluates
        # every formula on it directly
        cert = verdict.certificate
        print(f"  model with {cert.d} elements, checks: {model_check(cert, formulas)}")
        for e, el in enumerate(cert.to_json()["elements"]):
            print(f"    element {e}: {el}")
    # an independent oracle: ground over domains of size 1..3 and run the CNF engine
    print(f"  grounding finds a model with at most 3 elements: {ground_check(formulas, 3).sat}")

# S and W never need relations, so they are decided on one-element types
s = [parse(t, "S", vocab) for t in ("Every artist is a beekeeper", "Some artist is not a beekeeper")]
print("S example:", solve(s, vocab=vocab).status)
