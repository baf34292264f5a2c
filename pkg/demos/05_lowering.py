"""Encoding two-variable formulas as anaphora-fragment sentences.

Each lowered sentence set is satisfiable exactly when the source formula
is.  Run with ``python demos/05_lowering.py``.
"""

from nlsat.grammar import Vocabulary, realize
from nlsat.logic import Fo2Form, lower_fo2_form, render_fol, translate
from nlsat.solver import ground_check

vocab = Vocabulary.default()
forms = [
    Fo2Form(1, literals=((0, True), (1, False), (2, True))),
    Fo2Form(3, pairs=((0, 1), (2, 3)), verb=0),
    Fo2Form(4, p=(0, True), q=(1, False), verb=0, verb_positive=True),
]
for spec in forms:
    low = lower_fo2_form(spec, vocab)
    source = spec.formula(vocab)
    print(render_fol(source))
    for s in low.sentences:
        print(f"    {realize(s, low.vocab)}")
    lowered = [translate(s, low.vocab) for s in low.sentences]
    print(f"  satisfiable (d <= 3): source {ground_check([source], 3).sat}, "
          f"lowered {ground_check(lowered, 3).sat}")
