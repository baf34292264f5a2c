"""Simulating the five FO2 formula forms used in tiling reductions with fragment-A sentences.

The forms are

1. ``exists x. (l1(x) & ... & ln(x))``
2. ``all x. (l1(x) | ... | ln(x))``
3. ``all x. all y. (AND_i (p_i(x) <-> q_i(y)) -> r(x,y))``
4. ``all x. (+-p(x) -> exists y. (+-q(y) & +-r(x,y)))``
5. ``all x. (+-p(x) -> all y. (+-q(y) -> +-r(x,y)))``

where each ``li`` is a possibly negated unary atom. Each lowering returns
sentences of fragment A whose conjunction is satisfiable exactly when the
form is, over a vocabulary extended with fresh nouns and verbs.

Form 3 uses a chain of fresh relations ``R_0 ... R_n`` with ``R_0``
universal, ``R_i`` containing ``R_{i-1}`` restricted to pairs agreeing on
``p_i``/``q_i``, and ``R_n`` contained in ``r``. Fragment A can only refer
to the converse ``s(y,x)`` of a relation inside a relative clause, so the
chain alternates between storing ``R_i`` directly and storing its
converse, ending with the converse of ``R_n``.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..grammar import AbstractSentence, Noun, Template, Verb, Vocabulary
from .formula import And, Atom, Exists, Forall, Formula, Implies, Or, conj, lit

UnaryLit = tuple[int, bool]  # (noun index, positive)


@dataclass(frozen=True)
class Fo2Form:
    form: int
    literals: tuple[UnaryLit, ...] = ()     # forms 1 and 2
    pairs: tuple[tuple[int, int], ...] = ()  # form 3: (p_i, q_i) noun indices
    p: UnaryLit = (0, True)                  # forms 4 and 5
    q: UnaryLit = (0, True)
    verb: int = 0                            # forms 3 to 5
    verb_positive: bool = True               # forms 4 and 5

    def __post_init__(self):
        if self.form not in (1, 2, 3, 4, 5):
            raise ValueError(f"unknown form {self.form}")
        if self.form in (1, 2) and not self.literals:
            raise ValueError(f"form {self.form} needs at least one literal")
        if self.form == 3 and not self.pairs:
            raise ValueError("form 3 needs n >= 1")

    def formula(self, vocab: Vocabulary) -> Formula:
        """The source formula, for checking the lowering."""
        def u(idx, var, pos=True):
            return lit(vocab.nouns[idx].surface, (var,), not pos)

        verb = vocab.verbs[self.verb].base
        if self.form == 1:
            return Exists("x", conj(*(u(i, "x", s) for i, s in self.literals)))
        if self.form == 2:
            parts = [u(i, "x", s) for i, s in self.literals]
            return Forall("x", parts[0] if len(parts) == 1 else Or(tuple(parts)))
        if self.form == 3:
            iffs = [Or((And((u(p, "x"), u(q, "y"))), And((u(p, "x", False), u(q, "y", False)))))
                    for p, q in self.pairs]
            return Forall("x", Forall("y", Implies(conj(*iffs), Atom(verb, ("x", "y")))))
        r = lit(verb, ("x", "y"), not self.verb_positive)
        inner = (Exists("y", And((u(self.q[0], "y", self.q[1]), r))) if self.form == 4
                 else Forall("y", Implies(u(self.q[0], "y", self.q[1]), r)))
        return Forall("x", Implies(u(self.p[0], "x", self.p[1]), inner))


@dataclass(frozen=True)
class Lowering:
    sentences: tuple[AbstractSentence, ...]
    vocab: Vocabulary


def _fresh(existing: set[str], stem: str) -> str:
    k = 0
    while f"{stem}{k}" in existing:
        k += 1
    name = f"{stem}{k}"
    existing.add(name)
    return name


class _Builder:
    def __init__(self, vocab: Vocabulary):
        self.nouns = list(vocab.nouns)
        self.verbs = list(vocab.verbs)
        self.names = {n.surface for n in self.nouns} | {v.base for v in self.verbs} | {v.third for v in self.verbs}
        self.out: list[AbstractSentence] = []

    def noun(self, stem: str) -> int:
        self.nouns.append(Noun(_fresh(self.names, stem), "a"))
        return len(self.nouns) - 1

    def verb(self, stem: str) -> int:
        base = _fresh(self.names, stem)
        self.names.add(base + "s")
        self.verbs.append(Verb(base, base + "s"))
        return len(self.verbs) - 1

    def add(self, template: Template, *slots: int):
        self.out.append(AbstractSentence("A", template, tuple(slots)))

    def every_is(self, p: UnaryLit, q: UnaryLit):
        """all x. (p -> q) for literals p, q."""
        self.add(Template("S.every", subj_neg=not p[1], pred_neg=not q[1]), p[0], q[0])

    def result(self) -> Lowering:
        return Lowering(tuple(self.out), Vocabulary(tuple(self.nouns), tuple(self.verbs)))


def lower_fo2_form(spec: Fo2Form, vocab: Vocabulary) -> Lowering:
    b = _Builder(vocab)
    if spec.form == 1:
        star = b.noun("pstar")
        b.add(Template("S.some", cop_neg=False, pred_neg=False), star, star)
        for lit_ in spec.literals:
            b.every_is((star, True), lit_)
    elif spec.form == 2:
        _clause(b, list(spec.literals))
    elif spec.form == 3:
        _chain(b, spec)
    else:
        (p, ps), (q, qs) = spec.p, spec.q
        if spec.form == 4:
            t = (Template("V.every", subj_neg=not ps, obj_det="some", obj_neg=not qs) if spec.verb_positive
                 else Template("V.no", subj_neg=not ps, obj_det="every", obj_neg=not qs))
        else:
            t = (Template("V.every", subj_neg=not ps, obj_det="every", obj_neg=not qs) if spec.verb_positive
                 else Template("V.no", subj_neg=not ps, obj_det="any", obj_neg=not qs))
        b.add(t, p, q, spec.verb)
    return b.result()


def _clause(b: _Builder, lits: list[UnaryLit]):
    # all x. (l1 | ... | ln), split with fresh nouns when wider than three
    while len(lits) > 3:
        t = b.noun("link")
        _clause(b, lits[:2] + [(t, True)])
        lits = [(t, False)] + lits[2:]
    neg = [(i, not s) for i, s in lits]
    if len(lits) == 1:
        b.every_is(neg[0], lits[0])
    elif len(lits) == 2:
        b.every_is(neg[0], lits[1])
    else:
        (o, os_), (p, ps), (q, qs) = neg[0], neg[1], lits[2]
        b.add(Template("W.every", subj_neg=not os_, rel_neg=not ps, pred_neg=not qs), o, p, q)


def _chain(b: _Builder, spec: Fo2Form):
    n = len(spec.pairs)
    rel = [b.verb("chain") for _ in range(n + 1)]
    anchor = spec.pairs[0][0]
    signs = [(a, c) for a in (False, True) for c in (False, True)]
    # R_0 holds everywhere
    for a, c in signs:
        b.add(Template("V.every", subj_neg=a, obj_det="every", obj_neg=c), anchor, anchor, rel[0])
    for i, (p, q) in enumerate(spec.pairs, 1):
        converse = (n - i) % 2 == 0
        for neg in (False, True):
            t = Template("A.every", subj_neg=neg, obj_det="every", obj_neg=neg, rel_neg=False)
            if converse:
                # all y. all x. (q_i(y) & p_i(x) & R_{i-1}(x,y) -> R_i(x,y)), read from y
                b.add(t, q, p, rel[i], rel[i - 1])
            else:
                b.add(t, p, q, rel[i], rel[i - 1])
    # R_n is stored as its converse; R_n(x,y) -> r(x,y)
    for a, c in signs:
        t = Template("A.every", subj_neg=a, obj_det="every", obj_neg=c, rel_neg=False)
        b.add(t, anchor, anchor, spec.verb, rel[n])
