"""Constraint form of a set of fragment formulas.

Every fragment formula falls into one of four shapes:

* unary clauses, ``all x. C(x)`` with ``C`` a clause of unary literals;
* guard clauses, ``all x. all y. C(x, y)``;
* witness requirements, ``all x. (G(x) -> exists y. B(x, y))``;
* realizers, ``exists x. L(x)`` optionally with a local obligation
  ``all y. C(x, y)`` or a one-shot requirement ``exists y. B(x, y)``.

All rewrites are classical equivalences; no predicates are introduced.
Literals are ``Lit(kind, pred, positive)`` where ``kind`` is ``"x"`` or
``"y"`` for unary atoms and ``"xy"`` or ``"yx"`` for binary atoms with
those argument orders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .formula import And, Atom, Exists, Forall, Formula, Implies, Not, Or, subformulas


class UnrecognizedShape(ValueError):
    pass


class Lit(NamedTuple):
    kind: str
    pred: int
    positive: bool

    def negate(self) -> "Lit":
        return Lit(self.kind, self.pred, not self.positive)

    @property
    def binary(self) -> bool:
        return len(self.kind) == 2


Clause = tuple[Lit, ...]


@dataclass(frozen=True)
class Signature:
    unary: tuple[str, ...]
    binary: tuple[str, ...] = ()

    def __post_init__(self):
        names = self.unary + self.binary
        if len(set(names)) != len(names):
            raise ValueError("predicate names must be distinct")

    @classmethod
    def of(cls, formulas: Iterable[Formula]) -> "Signature":
        """Predicates in order of first occurrence."""
        unary: dict[str, None] = {}
        binary: dict[str, None] = {}
        for f in formulas:
            for g in subformulas(f):
                if isinstance(g, Atom):
                    (unary if len(g.args) == 1 else binary)[g.pred] = None
        return cls(tuple(unary), tuple(binary))

    def merge(self, other: "Signature") -> "Signature":
        return Signature(tuple(dict.fromkeys(self.unary + other.unary)),
                         tuple(dict.fromkeys(self.binary + other.binary)))

    @property
    def n1(self) -> int:
        return len(self.unary)

    @property
    def n2(self) -> int:
        return len(self.binary)


@dataclass(frozen=True)
class Witness:
    """``all x. (guard(x) -> exists y. body(x, y))``."""
    guard: tuple[Lit, ...]
    body: tuple[Lit, ...]


@dataclass(frozen=True)
class Realizer:
    """``exists x. (lits(x) & all y. obligations & exists y. one_shots)``."""
    lits: tuple[Lit, ...]
    obligations: tuple[Clause, ...] = ()
    one_shots: tuple[tuple[Lit, ...], ...] = ()


@dataclass(frozen=True)
class NormalTheory:
    signature: Signature
    unary_clauses: tuple[Clause, ...] = ()
    guard_clauses: tuple[Clause, ...] = ()
    witnesses: tuple[Witness, ...] = ()
    realizers: tuple[Realizer, ...] = ()
    # per source formula: (constraint kind, index into that list)
    origin: tuple[tuple[str, int], ...] = field(default=(), compare=False)

    @property
    def has_binary(self) -> bool:
        return bool(self.guard_clauses or self.witnesses
                    or any(r.obligations or r.one_shots for r in self.realizers))

    @property
    def max_unary_width(self) -> int:
        widths = [len(c) for c in self.unary_clauses] + [len(r.lits) for r in self.realizers]
        return max(widths, default=0)


def _literal(f: Formula, roles: dict[str, str], sig: Signature) -> Lit | None:
    positive = True
    while isinstance(f, Not):
        positive = not positive
        f = f.arg
    if not isinstance(f, Atom):
        return None
    try:
        kind = "".join(roles[a] for a in f.args)
    except KeyError:
        raise UnrecognizedShape(f"free variable in {f}") from None
    if kind in ("x", "y"):
        if f.pred not in sig.unary:
            raise UnrecognizedShape(f"{f.pred} is not a unary predicate of the signature")
        return Lit(kind, sig.unary.index(f.pred), positive)
    if kind in ("xy", "yx"):
        if f.pred not in sig.binary:
            raise UnrecognizedShape(f"{f.pred} is not a binary predicate of the signature")
        return Lit(kind, sig.binary.index(f.pred), positive)
    raise UnrecognizedShape(f"unsupported atom {f}")


def _conjuncts(f: Formula) -> list[Formula]:
    return list(f.args) if isinstance(f, And) else [f]


def _split(parts: Sequence[Formula], roles, sig):
    """Separate literals from at most one quantified part."""
    lits, rest = [], []
    for p in parts:
        l = _literal(p, roles, sig)
        if l is None:
            rest.append(p)
        else:
            lits.append(l)
    if len(rest) > 1:
        raise UnrecognizedShape("more than one nested quantifier")
    return lits, (rest[0] if rest else None)


def _inner(q: Formula, roles, sig):
    """Classify a nested quantifier: ("all", premises, conclusion) or ("exists", body)."""
    if not isinstance(q, (Forall, Exists)) or q.var in roles:
        raise UnrecognizedShape(f"unsupported subformula {q}")
    roles = {**roles, q.var: "y"}
    if isinstance(q, Exists):
        lits, rest = _split(_conjuncts(q.body), roles, sig)
        if rest is not None:
            raise UnrecognizedShape("nested quantifier below the second variable")
        return ("exists", tuple(lits))
    body = q.body
    if isinstance(body, Implies):
        prem, rest = _split(_conjuncts(body.left), roles, sig)
        concl = _literal(body.right, roles, sig)
        if rest is not None or concl is None:
            raise UnrecognizedShape(f"unsupported universal body {body}")
        return ("all", tuple(l.negate() for l in prem) + (concl,))
    if isinstance(body, Or):
        clause = [_literal(a, roles, sig) for a in body.args]
    else:
        clause = [_literal(body, roles, sig)]
    if any(l is None for l in clause):
        raise UnrecognizedShape(f"unsupported universal body {body}")
    return ("all", tuple(clause))


def _classify(f: Formula, sig: Signature):
    """Return (kind, constraint) for one closed formula."""
    if isinstance(f, Forall):
        roles = {f.var: "x"}
        body = f.body
        if isinstance(body, Implies):
            prem, nested = _split(_conjuncts(body.left), roles, sig)
            concl = _literal(body.right, roles, sig)
            neg_prem = tuple(l.negate() for l in prem)
            if nested is None and concl is not None:
                return "unary", neg_prem + (concl,)
            if nested is None:
                kind, parts = _inner(body.right, roles, sig)
                if kind == "all":
                    return "guard", neg_prem + parts
                return "witness", Witness(tuple(prem), parts)
            if concl is None:
                raise UnrecognizedShape("nested quantifiers on both sides of an implication")
            kind, parts = _inner(nested, roles, sig)
            if kind == "exists":
                # (G & exists y. B) -> c  ==  all y. (~G | ~B | c)
                return "guard", neg_prem + tuple(l.negate() for l in parts) + (concl,)
            # (G & all y. C) -> c  ==  (G & ~c) -> exists y. ~C
            return "witness", Witness(tuple(prem) + (concl.negate(),), tuple(l.negate() for l in parts))
        if isinstance(body, Or):
            clause = [_literal(a, roles, sig) for a in body.args]
        else:
            clause = [_literal(body, roles, sig)]
        if any(l is None for l in clause):
            raise UnrecognizedShape(f"unsupported universal formula {f}")
        return "unary", tuple(clause)
    if isinstance(f, Exists):
        roles = {f.var: "x"}
        lits, nested = _split(_conjuncts(f.body), roles, sig)
        if nested is None:
            return "realizer", Realizer(tuple(lits))
        kind, parts = _inner(nested, roles, sig)
        if kind == "all":
            return "realizer", Realizer(tuple(lits), obligations=(parts,))
        return "realizer", Realizer(tuple(lits), one_shots=(parts,))
    raise UnrecognizedShape(f"formula is not quantified: {f}")


def normalize(formulas: Sequence[Formula], signature: Signature | None = None) -> NormalTheory:
    """Map each formula to exactly one constraint; see the module docstring."""
    sig = signature or Signature.of(formulas)
    buckets: dict[str, list] = {"unary": [], "guard": [], "witness": [], "realizer": []}
    origin = []
    for f in formulas:
        kind, item = _classify(f, sig)
        origin.append((kind, len(buckets[kind])))
        buckets[kind].append(item)
    return NormalTheory(sig, tuple(buckets["unary"]), tuple(buckets["guard"]),
                        tuple(buckets["witness"]), tuple(buckets["realizer"]), tuple(origin))
