"""First-order formulas over unary and binary predicates, with a canonical text syntax.

Syntax (ASCII)::

    all x. (p(x) -> exists y. (q(y) & r(x,y)))

Connectives are ``~``, ``&``, ``|`` and ``->``; ``&`` and ``|`` are n-ary.
A quantifier body extends as far to the right as possible. The renderer
parenthesizes every compound operand, so ``parse_fol(render_fol(f)) == f``
and ``render_fol(parse_fol(t)) == t`` for canonical text ``t``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]

    def __post_init__(self):
        if len(self.args) < 2:
            raise ValueError("And needs at least two operands")


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]

    def __post_init__(self):
        if len(self.args) < 2:
            raise ValueError("Or needs at least two operands")


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


Formula = Union[Atom, Not, And, Or, Implies, Forall, Exists]
Quantifier = (Forall, Exists)


def conj(*parts: Formula) -> Formula:
    """And of ``parts``, or the single part itself."""
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def lit(pred: str, args: tuple[str, ...], negated: bool = False) -> Formula:
    a = Atom(pred, args)
    return Not(a) if negated else a


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from subformulas(a)
    elif isinstance(f, Implies):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, Quantifier):
        yield from subformulas(f.body)


def variables(f: Formula) -> set[str]:
    out = set()
    for g in subformulas(f):
        if isinstance(g, Atom):
            out.update(g.args)
        elif isinstance(g, Quantifier):
            out.add(g.var)
    return out


def free_variables(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return set(f.args)
    if isinstance(f, Not):
        return free_variables(f.arg)
    if isinstance(f, (And, Or)):
        return set().union(*(free_variables(a) for a in f.args))
    if isinstance(f, Implies):
        return free_variables(f.left) | free_variables(f.right)
    return free_variables(f.body) - {f.var}


# ---------------------------------------------------------------------------
# rendering

def render_fol(f: Formula) -> str:
    if isinstance(f, Atom):
        return f"{f.pred}({','.join(f.args)})"
    if isinstance(f, Not):
        inner = render_fol(f.arg)
        return "~" + (inner if isinstance(f.arg, (Atom, Not)) else f"({inner})")
    if isinstance(f, (And, Or)):
        op = " & " if isinstance(f, And) else " | "
        last = len(f.args) - 1
        return op.join(_operand(a, i == last) for i, a in enumerate(f.args))
    if isinstance(f, Implies):
        return f"{_operand(f.left, False)} -> {_operand(f.right, True)}"
    word = "all" if isinstance(f, Forall) else "exists"
    body = render_fol(f.body)
    if isinstance(f.body, (And, Or, Implies)):
        body = f"({body})"
    return f"{word} {f.var}. {body}"


def _operand(f: Formula, last: bool) -> str:
    s = render_fol(f)
    if isinstance(f, (And, Or, Implies)) or (isinstance(f, Quantifier) and not last):
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# parsing

class FolSyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(->)|([~&|().,])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise FolSyntaxError(f"unexpected character {text[pos]!r}", pos)
        toks.append((m.group(m.lastindex), m.start(m.lastindex)))
        pos = m.end()
    toks.append(("", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def pos(self) -> int:
        return self.toks[self.i][1]

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if expected is not None and tok != expected:
            shown = repr(tok) if tok else "end of input"
            raise FolSyntaxError(f"expected {expected!r}, found {shown}", self.pos())
        self.i += 1
        return tok

    def ident(self) -> str:
        tok = self.peek()
        if not tok or not (tok[0].isalpha() or tok[0] == "_"):
            raise FolSyntaxError("expected identifier", self.pos())
        return self.take()

    def expr(self) -> Formula:
        if self.peek() in ("all", "exists"):
            return self.quant()
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.expr())
        return left

    def quant(self) -> Formula:
        word = self.take()
        var = self.ident()
        self.take(".")
        body = self.expr()
        return Forall(var, body) if word == "all" else Exists(var, body)

    def _nary(self, op: str, sub, cls):
        parts = [sub()]
        while self.peek() == op:
            self.take()
            parts.append(sub())
        return parts[0] if len(parts) == 1 else cls(tuple(parts))

    def disj(self) -> Formula:
        return self._nary("|", self.conj, Or)

    def conj(self) -> Formula:
        return self._nary("&", self.unary, And)

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "~":
            self.take()
            return Not(self.unary())
        if tok == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        if tok in ("all", "exists"):
            return self.quant()
        name = self.ident()
        self.take("(")
        args = [self.ident()]
        while self.peek() == ",":
            self.take()
            args.append(self.ident())
        self.take(")")
        return Atom(name, tuple(args))


def parse_fol(text: str) -> Formula:
    p = _Parser(text)
    f = p.expr()
    if p.peek():
        raise FolSyntaxError(f"unexpected {p.peek()!r}", p.pos())
    return f
