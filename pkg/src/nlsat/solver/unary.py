"""Decision procedures for the fragments without verbs.

Without binary predicates, elements do not interact: a theory is
satisfiable iff every realizer's literals are consistent with the unary
clauses (and, with no realizers, the clauses alone are consistent). Each
realizer then gets its own element.
"""

from __future__ import annotations

import time

import numpy as np

from ..logic.normal import Lit, NormalTheory
from .certificate import SAT, UNSAT, ModelCertificate, Verdict
from .cnf import CnfFormula, SolverBudgetExceeded, cnf_sat


class WrongFragment(ValueError):
    pass


def _node(l: Lit) -> int:
    return 2 * l.pred + (0 if l.positive else 1)


def _scc(n: int, succ: list[list[int]]) -> list[int]:
    """Tarjan's algorithm, iterative; components numbered in reverse topological order."""
    index = [-1] * n
    low = [0] * n
    comp = [-1] * n
    on_stack = [False] * n
    stack: list[int] = []
    counter = ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(succ[v]):
                work[-1] = (v, i + 1)
                w = succ[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def two_sat(n: int, clauses) -> list[bool] | None:
    """Satisfying assignment of 2-CNF over ``n`` predicates, or None.

    ``clauses`` are sequences of one or two :class:`Lit`; a unit is read as
    ``l | l``.
    """
    succ: list[list[int]] = [[] for _ in range(2 * n)]
    for c in clauses:
        a, b = (c[0], c[0]) if len(c) == 1 else c
        succ[_node(a) ^ 1].append(_node(b))
        succ[_node(b) ^ 1].append(_node(a))
    comp = _scc(2 * n, succ)
    if any(comp[2 * i] == comp[2 * i + 1] for i in range(n)):
        return None
    # a literal is true when its component comes later in topological order
    return [comp[2 * i] < comp[2 * i + 1] for i in range(n)]


def _check_unary(theory: NormalTheory, name: str, width: int | None):
    if theory.has_binary or theory.signature.n2:
        raise WrongFragment(f"{name} does not accept binary predicates")
    if width is not None and theory.max_unary_width > width:
        raise WrongFragment(f"{name} accepts clauses of width at most {width}")


def _certificate(theory: NormalTheory, rows: list[list[bool]]) -> ModelCertificate:
    unary = np.array(rows, dtype=bool).reshape(len(rows), theory.signature.n1)
    binary = np.zeros((theory.signature.n2, len(rows), len(rows)), dtype=bool)
    return ModelCertificate(theory.signature, unary, binary,
                            realizers=tuple(range(len(theory.realizers))))


def solve_s(theory: NormalTheory) -> Verdict:
    """Implication-graph 2-SAT, once per realizer."""
    _check_unary(theory, "solve_s", 2)
    start = time.perf_counter()
    n = theory.signature.n1
    base = list(theory.unary_clauses)
    runs = [r.lits for r in theory.realizers] or [()]
    rows = []
    for units in runs:
        model = two_sat(n, base + [(l,) for l in units])
        if model is None:
            return Verdict(UNSAT, stats={"strategy": "2sat", "calls": len(rows) + 1,
                                         "seconds": time.perf_counter() - start})
        rows.append(model)
    return Verdict(SAT, _certificate(theory, rows),
                   {"strategy": "2sat", "calls": len(rows), "seconds": time.perf_counter() - start})


def _dimacs(l: Lit) -> int:
    return (l.pred + 1) if l.positive else -(l.pred + 1)


def solve_w(theory: NormalTheory, *, max_decisions: int | None = None,
            deadline: float | None = None) -> Verdict:
    """One CNF call per realizer (or one in all if there are none)."""
    _check_unary(theory, "solve_w", 3)
    start = time.perf_counter()
    n = theory.signature.n1
    cnf = CnfFormula(n, tuple(tuple(_dimacs(l) for l in c) for c in theory.unary_clauses))
    runs = [r.lits for r in theory.realizers] or [()]
    rows = []
    stats: dict = {"strategy": "cnf"}
    for units in runs:
        budget = None if max_decisions is None else max(1, max_decisions - stats.get("decisions", 0))
        model = cnf_sat(cnf, [_dimacs(l) for l in units], max_decisions=budget,
                        deadline=deadline, stats=stats)
        if model is None:
            stats.update(calls=len(rows) + 1, seconds=time.perf_counter() - start)
            return Verdict(UNSAT, stats=stats)
        rows.append(model)
    stats.update(calls=len(rows), seconds=time.perf_counter() - start)
    return Verdict(SAT, _certificate(theory, rows), stats)


__all__ = ["solve_s", "solve_w", "two_sat", "WrongFragment", "SolverBudgetExceeded"]
