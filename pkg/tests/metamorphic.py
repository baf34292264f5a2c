"""Verdict-preserving transformations shared by the metamorphic tests."""

import numpy as np

from conftest import formulas_of, random_instance
from nlsat.logic.formula import And, Atom, Implies, Not, Or
from nlsat.logic.normal import Signature
from nlsat.solver import model_check, solve_formulas

# instance sizes per fragment: (m, n1, n2), small enough to stay fast
SIZES = {"S": (12, 6, 0), "W": (14, 7, 0), "V": (8, 3, 2), "Z": (8, 3, 2), "A": (8, 3, 2)}


def mapped(f, atom):
    """Rebuild ``f`` with every atom (and negated atom) passed through ``atom``."""
    if isinstance(f, Atom):
        return atom(f, False)
    if isinstance(f, Not) and isinstance(f.arg, Atom):
        return atom(f.arg, True)
    if isinstance(f, Not):
        return Not(mapped(f.arg, atom))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(mapped(a, atom) for a in f.args))
    if isinstance(f, Implies):
        return Implies(mapped(f.left, atom), mapped(f.right, atom))
    return type(f)(f.var, mapped(f.body, atom))


def rename(formulas, rng):
    """A random bijective renaming onto fresh names, listed in shuffled order."""
    sig = Signature.of(formulas)
    un = [f"p{i}" for i in rng.permutation(sig.n1)]
    bi = [f"r{i}" for i in rng.permutation(sig.n2)]
    names = dict(zip(sig.unary, un)) | dict(zip(sig.binary, bi))

    def atom(a, neg):
        new = Atom(names[a.pred], a.args)
        return Not(new) if neg else new
    return [mapped(f, atom) for f in formulas]


def flip(formulas, pred):
    """Negate every occurrence of ``pred``."""
    def atom(a, neg):
        return a if (a.pred == pred) == neg else Not(a)
    return [mapped(f, atom) for f in formulas]


def verdict(formulas, fragment):
    return solve_formulas(formulas, fragment, wall_seconds=None)


def instance(fragment, rng, vocab):
    m, n1, n2 = SIZES[fragment]
    m = int(rng.integers(1, m + 1))
    return formulas_of(random_instance(fragment, rng, m, n1, n2, vocab=vocab), vocab)


def check_renaming(fragment, rng, vocab):
    fs = instance(fragment, rng, vocab)
    return verdict(fs, fragment).status == verdict(rename(fs, rng), fragment).status


def check_polarity(fragment, rng, vocab):
    fs = instance(fragment, rng, vocab)
    sig = Signature.of(fs)
    preds = sig.unary + sig.binary
    pred = preds[int(rng.integers(len(preds)))]
    return verdict(fs, fragment).status == verdict(flip(fs, pred), fragment).status


def check_order(fragment, rng, vocab):
    fs = instance(fragment, rng, vocab)
    shuffled = [fs[i] for i in rng.permutation(len(fs))]
    return verdict(fs, fragment).status == verdict(shuffled, fragment).status


def check_antimonotone(fragment, rng, vocab):
    fs = instance(fragment, rng, vocab)
    keep = rng.random(len(fs)) < 0.5
    sub = [f for f, k in zip(fs, keep) if k]
    big, small = verdict(fs, fragment), verdict(sub, fragment)
    return not big.is_sat or small.is_sat


def check_duplication(fragment, rng, vocab, tries=50):
    """Clone a random element of a sat certificate; None if no sat instance was drawn."""
    for _ in range(tries):
        fs = instance(fragment, rng, vocab)
        v = verdict(fs, fragment)
        if v.is_sat:
            a = int(rng.integers(v.certificate.d))
            return model_check(v.certificate.with_clone(a), fs)
    return None


CHECKS = {
    "renaming": check_renaming,
    "polarity": check_polarity,
    "order": check_order,
    "antimonotone": check_antimonotone,
    "duplication": check_duplication,
}


def run(name, count, seed, vocab, fragments="SWVZA"):
    """Run ``count`` checks spread over ``fragments``; returns the failing indices."""
    failures = []
    for i in range(count):
        fragment = fragments[i % len(fragments)]
        rng = np.random.default_rng([seed, i])
        if CHECKS[name](fragment, rng, vocab) is False:
            failures.append((i, fragment))
    return failures
