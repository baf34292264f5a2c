import numpy as np
import pytest

import metamorphic as mm
from conftest import SHOWCASE_SAT, formulas_of, parse_all
from nlsat.logic import render_fol
from nlsat.solver import model_check, solve


def test_flip_and_rename_examples(vocab):
    fs = formulas_of(parse_all(["Every artist is a baker"], "S", vocab), vocab)
    assert render_fol(mm.flip(fs, "artist")[0]) == "all x. (~artist(x) -> baker(x))"
    assert render_fol(mm.flip(fs, "baker")[0]) == "all x. (artist(x) -> ~baker(x))"
    renamed = render_fol(mm.rename(fs, np.random.default_rng(0))[0])
    assert renamed in ("all x. (p0(x) -> p1(x))", "all x. (p1(x) -> p0(x))")


def test_flip_is_involution(vocab):
    rng = np.random.default_rng(1)
    for fragment in "SWVZA":
        fs = mm.instance(fragment, rng, vocab)
        for pred in ("artist", "admire"):
            assert mm.flip(mm.flip(fs, pred), pred) == fs


def test_clone_keeps_showcase_model(vocab):
    sents = parse_all(SHOWCASE_SAT, "V", vocab)
    fs = formulas_of(sents, vocab)
    c = solve(sents, vocab=vocab).certificate
    for a in range(c.d):
        clone = c.with_clone(a)
        assert clone.d == c.d + 1 and model_check(clone, fs)


@pytest.mark.parametrize("name", sorted(mm.CHECKS))
def test_metamorphic_relations(name, vocab):
    assert mm.run(name, 100, 7, vocab) == []
