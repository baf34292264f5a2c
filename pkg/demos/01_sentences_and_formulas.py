"""Sentences, their templates and their first-order readings.

Run with ``python demos/01_sentences_and_formulas.py``.
"""

import numpy as np

from nlsat.grammar import FRAGMENTS, Vocabulary, fragment_templates, parse, realize, sample_instance
from nlsat.grammar import InstanceParams
from nlsat.logic import render_fol, to_smtlib, translate

vocab = Vocabulary.default()
print(f"lexicon: {len(vocab.nouns)} nouns, {len(vocab.verbs)} verbs")

# each fragment extends the previous one by a few more sentence shapes
for fragment in FRAGMENTS:
    print(f"fragment {fragment}: {len(fragment_templates(fragment))} templates")

# a random instance of fragment Z: 4 sentences over 3 nouns and 2 verbs
rng = np.random.default_rng(1)
sentences = sample_instance("Z", InstanceParams(4, 3, 2), rng, vocab)
for s in sentences:
    text = realize(s, vocab)
    print(f"  {text:<60} {render_fol(translate(s, vocab))}")
    assert parse(text, "Z", vocab) == s  # the grammar reads its own output back

# the same set as an SMT-LIB script, for any external solver
print(to_smtlib([translate(s, vocab) for s in sentences]))
