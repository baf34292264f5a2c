"""SMT-LIB 2 export for external cross-checks."""

from __future__ import annotations

import re
from typing import Sequence

from .formula import And, Atom, Exists, Forall, Formula, Implies, Not, Or
from .normal import Signature

_SIMPLE = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*\Z")
_RESERVED = frozenset("""
    ! _ as BINARY DECIMAL exists HEXADECIMAL forall let match NUMERAL par STRING
    and or not => true false assert check-sat declare-fun declare-sort set-logic
""".split())


def _symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"cannot express {name!r} as an SMT-LIB symbol")
    return f"|{name}|"


def _term(f: Formula) -> str:
    if isinstance(f, Atom):
        return f"({_symbol(f.pred)} {' '.join(_symbol(a) for a in f.args)})"
    if isinstance(f, Not):
        return f"(not {_term(f.arg)})"
    if isinstance(f, (And, Or)):
        op = "and" if isinstance(f, And) else "or"
        return f"({op} {' '.join(_term(a) for a in f.args)})"
    if isinstance(f, Implies):
        return f"(=> {_term(f.left)} {_term(f.right)})"
    q = "forall" if isinstance(f, Forall) else "exists"
    return f"({q} (({_symbol(f.var)} U)) {_term(f.body)})"


def to_smtlib(formulas: Sequence[Formula], signature: Signature | None = None) -> str:
    sig = signature or Signature.of(formulas)
    lines = ["(set-logic UF)", "(declare-sort U 0)"]
    lines += [f"(declare-fun {_symbol(u)} (U) Bool)" for u in sig.unary]
    lines += [f"(declare-fun {_symbol(r)} (U U) Bool)" for r in sig.binary]
    lines += [f"(assert {_term(f)})" for f in formulas]
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
