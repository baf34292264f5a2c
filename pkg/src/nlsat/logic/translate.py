"""Compositional first-order semantics for fragment sentences.

The subject determiner scopes over the object determiner, a relative clause
is conjoined into the restrictor it modifies, ``No`` is a universal with a
negated matrix, ``does not`` negates the whole verb phrase including its
object quantifier, and the anaphor ``him`` in fragment A is the subject
variable. Double negations are removed, so every result has one of the
fixed template shapes.
"""

from __future__ import annotations

from ..grammar import AbstractSentence, Vocabulary
from .formula import Exists, Forall, Formula, Implies, Not, conj, lit

X, Y = "x", "y"


def _neg(f: Formula) -> Formula:
    return f.arg if isinstance(f, Not) else Not(f)


def _vp(det: str, restrictor: list[Formula], verb: Formula) -> Formula:
    """Object quantifier ``det`` over ``restrictor`` (on y) applied to ``verb``."""
    if det in ("some", "any"):
        return Exists(Y, conj(*restrictor, verb))
    if det == "every":
        return Forall(Y, Implies(conj(*restrictor), verb))
    if det == "no":
        return Forall(Y, Implies(conj(*restrictor), _neg(verb)))
    raise ValueError(f"unknown determiner {det!r}")


def _negated_vp(det: str, restrictor: list[Formula], verb: Formula) -> Formula:
    # "does not r some/any q" is not-exists, "does not r every q" is exists-not
    flipped = "every" if det in ("some", "any") else "some"
    return _vp(flipped, restrictor, _neg(verb))


def translate(s: AbstractSentence, vocab: Vocabulary | None = None) -> Formula:
    """The closed two-variable formula expressing ``s``."""
    vocab = vocab or Vocabulary.default()
    t = s.template
    form, kind = t.form.split(".")
    slot = dict(zip(t.slot_names, s.slots))

    def noun(name, var, neg=False):
        return lit(vocab.nouns[slot[name]].surface, (var,), bool(neg))

    def verb(name, args):
        return lit(vocab.verbs[slot[name]].base, args)

    def matrix(name, neg):
        # copula predicate; "No" negates the matrix
        return noun(name, X, bool(neg) ^ (kind == "no") ^ bool(t.cop_neg))

    if form == "S":
        restr = [noun("p", X, t.subj_neg)]
        body = matrix("q", t.pred_neg)
    elif form == "W":
        restr = [noun("o", X, t.subj_neg), noun("p", X, t.rel_neg)]
        body = matrix("q", t.pred_neg)
    elif form == "Z":
        obj = [noun("p", Y, t.obj_neg)]
        rel = (_negated_vp if t.rel_neg else _vp)(t.obj_det, obj, verb("r", (X, Y)))
        restr = [noun("o", X, t.subj_neg), rel]
        body = matrix("q", t.pred_neg)
    else:
        restr = [noun("o" if form == "A" else "p", X, t.subj_neg)]
        if form == "V":
            obj = [noun("q", Y, t.obj_neg)]
        else:
            anaphor = verb("s", (Y, X))
            obj = [noun("p", Y, t.obj_neg), _neg(anaphor) if t.rel_neg else anaphor]
        r = verb("r", (X, Y))
        if kind in ("no", "some_not"):
            body = _negated_vp(t.obj_det, obj, r)
        else:
            body = _vp(t.obj_det, obj, r)
    if kind in ("every", "no"):
        return Forall(X, Implies(conj(*restr), body))
    return Exists(X, conj(*restr, body))
