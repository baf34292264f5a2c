"""Bounded model search by grounding formulas into CNF.

Works on formula trees directly (no normal form), so it serves as an
oracle for the decision procedures: for each domain size 1..d, every
quantifier is expanded over the domain, subformulas get Tseitin variables,
and the result goes to :func:`cnf_sat`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..logic.formula import And, Atom, Exists, Forall, Formula, Implies, Not, Or
from ..logic.normal import Signature
from .certificate import ModelCertificate
from .cnf import CnfFormula, cnf_sat

DEFAULT_CLAUSE_CAP = 2_000_000


class GroundingTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class GroundResult:
    """``model`` is the first model found, or None if there is none up to ``max_size``."""
    model: ModelCertificate | None
    max_size: int

    @property
    def sat(self) -> bool:
        return self.model is not None


class _Grounder:
    def __init__(self, sig: Signature, d: int, cap: int):
        self.sig, self.d, self.cap = sig, d, cap
        n1, n2 = sig.n1, sig.n2
        self.nvars = d * n1 + n2 * d * d
        self.clauses: list[tuple[int, ...]] = []
        self.memo: dict = {}

    def atom_var(self, f: Atom, env: dict[str, int]) -> int:
        vals = [env[a] for a in f.args]
        if len(vals) == 1:
            return 1 + vals[0] * self.sig.n1 + self.sig.unary.index(f.pred)
        k = self.sig.binary.index(f.pred)
        return 1 + self.d * self.sig.n1 + (k * self.d + vals[0]) * self.d + vals[1]

    def fresh(self) -> int:
        self.nvars += 1
        return self.nvars

    def add(self, clause):
        self.clauses.append(tuple(clause))
        if len(self.clauses) > self.cap:
            raise GroundingTooLarge(f"more than {self.cap} clauses")

    def gate(self, parts: list[int], is_and: bool) -> int:
        if len(parts) == 1:
            return parts[0]
        g = self.fresh()
        if is_and:
            for p in parts:
                self.add((-g, p))
            self.add([g] + [-p for p in parts])
        else:
            for p in parts:
                self.add((g, -p))
            self.add([-g] + parts)
        return g

    def lit(self, f: Formula, env: dict[str, int]) -> int:
        key = (id(f), tuple(sorted(env.items())))
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        if isinstance(f, Atom):
            out = self.atom_var(f, env)
        elif isinstance(f, Not):
            out = -self.lit(f.arg, env)
        elif isinstance(f, (And, Or)):
            out = self.gate([self.lit(a, env) for a in f.args], isinstance(f, And))
        elif isinstance(f, Implies):
            out = self.gate([-self.lit(f.left, env), self.lit(f.right, env)], False)
        else:
            parts = [self.lit(f.body, {**env, f.var: e}) for e in range(self.d)]
            out = self.gate(parts, isinstance(f, Forall))
        self.memo[key] = (out, f)  # keep f alive so its id stays unique
        return out


def ground_check(formulas: Sequence[Formula], d: int, signature: Signature | None = None, *,
                 clause_cap: int = DEFAULT_CLAUSE_CAP, min_size: int = 1) -> GroundResult:
    """Search for a model with at most ``d`` elements, smallest domains first."""
    if d < 1:
        raise ValueError("domain size must be at least 1")
    sig = signature or Signature.of(formulas)
    for size in range(min_size, d + 1):
        g = _Grounder(sig, size, clause_cap)
        for f in formulas:
            g.add((g.lit(f, {}),))
        assignment = cnf_sat(CnfFormula(g.nvars, tuple(g.clauses)))
        if assignment is None:
            continue
        bits = np.array(assignment[: size * sig.n1 + sig.n2 * size * size], dtype=bool)
        unary = bits[: size * sig.n1].reshape(size, sig.n1)
        binary = bits[size * sig.n1:].reshape(sig.n2, size, size)
        return GroundResult(ModelCertificate(sig, unary, binary), d)
    return GroundResult(None, d)
