"""Propositional CNF engine.

A conflict-driven DPLL solver (unit propagation over two watched literals,
first-UIP clause learning, non-chronological backjumping, Luby restarts).
The inner loop is compiled with numba; all solver state lives in numpy
arrays owned by :class:`CnfSolver`, so a search can be suspended when a
budget slice runs out and resumed after the wall clock has been checked.

Branching is deterministic: the unassigned variable with the highest
activity is chosen, ties broken towards the lowest index, and a variable is
first tried with its saved phase (initially ``phase``, positive by default).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

SAT = 1
UNSAT = 0
UNKNOWN = 2
_GROW = 3

# st[] slots
_NCLS, _NLITS, _QHEAD, _TSIZE, _LEVEL, _CONFL, _DECIS, _PROPS, _RESTART_IDX, _NEXT_RESTART, _OK = range(11)
_RESTART_UNIT = 100


@dataclass(frozen=True)
class CnfFormula:
    """Clauses over variables ``1..num_vars`` as DIMACS-style signed ints."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range for {self.num_vars} variables")

    @classmethod
    def from_clauses(cls, clauses: Iterable[Iterable[int]], num_vars: int | None = None) -> "CnfFormula":
        cl = tuple(tuple(int(x) for x in c) for c in clauses)
        if num_vars is None:
            num_vars = max((abs(x) for c in cl for x in c), default=0)
        return cls(num_vars, cl)


class SolverBudgetExceeded(Exception):
    """Raised by :func:`cnf_sat` when a node or wall-clock budget runs out."""


# ---------------------------------------------------------------------------
# compiled kernel

@njit(cache=True)
def _luby(i):
    # i >= 1
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        if i >= (1 << (k - 1)):
            i = i - (1 << (k - 1)) + 1
            k = 1
            while (1 << k) - 1 < i:
                k += 1
        else:
            k -= 1


@njit(cache=True)
def _lit_value(val, lit):
    v = val[lit >> 1]
    if v < 0:
        return -1
    return v ^ (lit & 1)


@njit(cache=True)
def _enqueue(val, level, reason, trail, st, lit, why):
    v = lit >> 1
    val[v] = 1 - (lit & 1)
    level[v] = st[_LEVEL]
    reason[v] = why
    trail[st[_TSIZE]] = lit
    st[_TSIZE] += 1


@njit(cache=True)
def _watch(whead, wnext, lits, cstart, c):
    for k in range(2):
        slot = 2 * c + k
        lit = lits[cstart[c] + k]
        wnext[slot] = whead[lit]
        whead[lit] = slot


@njit(cache=True)
def _propagate(lits, cstart, clen, whead, wnext, val, level, reason, trail, st):
    while st[_QHEAD] < st[_TSIZE]:
        p = trail[st[_QHEAD]]
        st[_QHEAD] += 1
        st[_PROPS] += 1
        false_lit = p ^ 1
        prev = -1
        slot = whead[false_lit]
        while slot != -1:
            nxt = wnext[slot]
            c = slot >> 1
            k = slot & 1
            base = cstart[c]
            other = lits[base + 1 - k]
            if _lit_value(val, other) == 1:
                prev = slot
                slot = nxt
                continue
            moved = False
            for j in range(2, clen[c]):
                cand = lits[base + j]
                if _lit_value(val, cand) != 0:
                    lits[base + j] = false_lit
                    lits[base + k] = cand
                    if prev == -1:
                        whead[false_lit] = nxt
                    else:
                        wnext[prev] = nxt
                    wnext[slot] = whead[cand]
                    whead[cand] = slot
                    moved = True
                    break
            if moved:
                slot = nxt
                continue
            prev = slot
            if _lit_value(val, other) == -1:
                _enqueue(val, level, reason, trail, st, other, c)
            else:
                return c
            slot = nxt
    return -1


@njit(cache=True)
def _backtrack(val, reason, trail, trail_lim, phase, st, target):
    if st[_LEVEL] <= target:
        return
    stop = trail_lim[target]
    for i in range(st[_TSIZE] - 1, stop - 1, -1):
        v = trail[i] >> 1
        phase[v] = val[v]
        val[v] = -1
        reason[v] = -1
    st[_TSIZE] = stop
    st[_QHEAD] = stop
    st[_LEVEL] = target


@njit(cache=True)
def _search(nvars, lits, cstart, clen, whead, wnext, val, level, reason, trail,
            trail_lim, activity, phase, seen, learnt, st, fst, max_decisions):
    """Run until SAT/UNSAT, ``max_decisions`` more decisions, or storage is short."""
    if st[_OK] == 0:
        return 0
    decisions_stop = st[_DECIS] + max_decisions
    while True:
        if clen.shape[0] - st[_NCLS] < 1 or lits.shape[0] - st[_NLITS] < nvars + 1:
            return 3
        confl = _propagate(lits, cstart, clen, whead, wnext, val, level, reason, trail, st)
        if confl != -1:
            st[_CONFL] += 1
            if st[_LEVEL] == 0:
                st[_OK] = 0
                return 0
            # first-UIP analysis
            nlearnt = 1
            path = 0
            p = -1
            idx = st[_TSIZE] - 1
            while True:
                base = cstart[confl]
                for j in range(clen[confl]):
                    q = lits[base + j]
                    v = q >> 1
                    if p != -1 and v == (p >> 1):
                        continue
                    if seen[v] == 0 and level[v] > 0:
                        seen[v] = 1
                        activity[v] += fst[0]
                        if activity[v] > 1e100:
                            for u in range(nvars):
                                activity[u] *= 1e-100
                            fst[0] *= 1e-100
                        if level[v] >= st[_LEVEL]:
                            path += 1
                        else:
                            learnt[nlearnt] = q
                            nlearnt += 1
                while seen[trail[idx] >> 1] == 0:
                    idx -= 1
                p = trail[idx]
                idx -= 1
                confl = reason[p >> 1]
                seen[p >> 1] = 0
                path -= 1
                if path == 0:
                    break
            learnt[0] = p ^ 1
            back = 0
            best = 1
            for j in range(1, nlearnt):
                lv = level[learnt[j] >> 1]
                if lv > back:
                    back = lv
                    best = j
            for j in range(1, nlearnt):
                seen[learnt[j] >> 1] = 0
            if nlearnt > 1:
                tmp = learnt[1]
                learnt[1] = learnt[best]
                learnt[best] = tmp
            fst[0] /= 0.95
            _backtrack(val, reason, trail, trail_lim, phase, st, back)
            if nlearnt == 1:
                _enqueue(val, level, reason, trail, st, learnt[0], -1)
            else:
                c = st[_NCLS]
                start = st[_NLITS]
                for j in range(nlearnt):
                    lits[start + j] = learnt[j]
                cstart[c] = start
                clen[c] = nlearnt
                st[_NCLS] += 1
                st[_NLITS] += nlearnt
                _watch(whead, wnext, lits, cstart, c)
                _enqueue(val, level, reason, trail, st, learnt[0], c)
            if st[_CONFL] >= st[_NEXT_RESTART]:
                st[_RESTART_IDX] += 1
                st[_NEXT_RESTART] = st[_CONFL] + 100 * _luby(st[_RESTART_IDX])
                _backtrack(val, reason, trail, trail_lim, phase, st, 0)
        else:
            if st[_DECIS] >= decisions_stop:
                return 2
            best_v = -1
            best_a = -1.0
            for v in range(nvars):
                if val[v] < 0 and activity[v] > best_a:
                    best_a = activity[v]
                    best_v = v
            if best_v == -1:
                return 1
            st[_DECIS] += 1
            trail_lim[st[_LEVEL]] = st[_TSIZE]
            st[_LEVEL] += 1
            lit = 2 * best_v + (1 - phase[best_v])
            _enqueue(val, level, reason, trail, st, lit, -1)


@njit(cache=True)
def _load(nvars, lits, cstart, clen, whead, wnext, val, level, reason, trail, st):
    """Attach watches for every stored clause and enqueue units; False if trivially UNSAT."""
    for c in range(st[_NCLS]):
        n = clen[c]
        if n == 0:
            st[_OK] = 0
            return False
        if n == 1:
            lit = lits[cstart[c]]
            cur = _lit_value(val, lit)
            if cur == 0:
                st[_OK] = 0
                return False
            if cur == -1:
                _enqueue(val, level, reason, trail, st, lit, -1)
        else:
            _watch(whead, wnext, lits, cstart, c)
    return True


# ---------------------------------------------------------------------------
# python driver

class CnfSolver:
    """One CNF search with resumable state. Use :func:`cnf_sat` for the common case."""

    def __init__(self, formula: CnfFormula, assumptions: Sequence[int] = (), phase: bool = True):
        n = formula.num_vars
        self.num_vars = n
        clauses = []
        for clause in list(formula.clauses) + [(a,) for a in assumptions]:
            seen: dict[int, None] = {}
            taut = False
            for x in clause:
                if -x in seen:
                    taut = True
                    break
                seen[x] = None
            if not taut:
                clauses.append([2 * (abs(x) - 1) + (x < 0) for x in seen])
        ncls = len(clauses)
        nlits = sum(len(c) for c in clauses)
        cap_cls = max(16, 2 * ncls + 64)
        cap_lits = max(64, 2 * nlits + 4 * (n + 1) + 64)
        self.lits = np.zeros(cap_lits, dtype=np.int32)
        self.cstart = np.zeros(cap_cls, dtype=np.int32)
        self.clen = np.zeros(cap_cls, dtype=np.int32)
        pos = 0
        for i, c in enumerate(clauses):
            self.cstart[i] = pos
            self.clen[i] = len(c)
            self.lits[pos:pos + len(c)] = c
            pos += len(c)
        self.whead = np.full(2 * max(n, 1), -1, dtype=np.int32)
        self.wnext = np.full(2 * cap_cls, -1, dtype=np.int32)
        self.val = np.full(max(n, 1), -1, dtype=np.int8)
        self.level = np.zeros(max(n, 1), dtype=np.int32)
        self.reason = np.full(max(n, 1), -1, dtype=np.int32)
        self.trail = np.zeros(max(n, 1), dtype=np.int32)
        self.trail_lim = np.zeros(max(n, 1) + 1, dtype=np.int32)
        self.activity = np.zeros(max(n, 1), dtype=np.float64)
        self.phase = np.full(max(n, 1), 1 if phase else 0, dtype=np.int8)
        self.seen = np.zeros(max(n, 1), dtype=np.int8)
        self.learnt = np.zeros(max(n, 1) + 1, dtype=np.int32)
        self.st = np.zeros(11, dtype=np.int64)
        self.st[_NCLS] = ncls
        self.st[_NLITS] = nlits
        self.st[_OK] = 1
        self.st[_NEXT_RESTART] = _RESTART_UNIT
        self.fst = np.ones(1, dtype=np.float64)
        _load(n, self.lits, self.cstart, self.clen, self.whead, self.wnext, self.val,
              self.level, self.reason, self.trail, self.st)

    @property
    def decisions(self) -> int:
        return int(self.st[_DECIS])

    @property
    def conflicts(self) -> int:
        return int(self.st[_CONFL])

    def _grow(self):
        cap_cls = self.clen.shape[0] * 2
        cap_lits = self.lits.shape[0] * 2 + self.num_vars + 1
        for name, cap, fill in (("cstart", cap_cls, 0), ("clen", cap_cls, 0), ("lits", cap_lits, 0)):
            old = getattr(self, name)
            new = np.full(cap, fill, dtype=old.dtype)
            new[: old.shape[0]] = old
            setattr(self, name, new)
        wn = np.full(2 * cap_cls, -1, dtype=np.int32)
        wn[: self.wnext.shape[0]] = self.wnext
        self.wnext = wn

    def step(self, max_decisions: int) -> int:
        """Search for at most ``max_decisions`` further decisions; returns SAT, UNSAT or UNKNOWN."""
        if self.num_vars == 0:
            return SAT if self.st[_OK] else UNSAT
        while True:
            status = _search(self.num_vars, self.lits, self.cstart, self.clen, self.whead,
                             self.wnext, self.val, self.level, self.reason, self.trail,
                             self.trail_lim, self.activity, self.phase, self.seen,
                             self.learnt, self.st, self.fst, max_decisions)
            if status != _GROW:
                return int(status)
            self._grow()

    def model(self) -> list[bool]:
        return [bool(v == 1) for v in self.val[: self.num_vars]]


def cnf_sat(formula: CnfFormula, assumptions: Sequence[int] = (), *, phase: bool = True,
            max_decisions: int | None = None, deadline: float | None = None,
            stats: dict | None = None) -> list[bool] | None:
    """Decide ``formula`` under unit ``assumptions``.

    Returns a complete assignment (index ``i`` holds variable ``i + 1``) or
    ``None`` when unsatisfiable. Raises :class:`SolverBudgetExceeded` when
    ``max_decisions`` or the ``deadline`` (a ``time.monotonic`` value) is hit.
    If ``stats`` is given, decision and conflict counts are added to it.
    """
    solver = CnfSolver(formula, assumptions, phase=phase)
    chunk = 20_000 if deadline is not None else (1 << 62)
    try:
        while True:
            budget = chunk
            if max_decisions is not None:
                budget = min(chunk, max(1, max_decisions - solver.decisions))
            status = solver.step(budget)
            if status == SAT:
                return solver.model()
            if status == UNSAT:
                return None
            if max_decisions is not None and solver.decisions >= max_decisions:
                raise SolverBudgetExceeded(f"decision budget {max_decisions} exhausted")
            if deadline is not None and time.monotonic() > deadline:
                raise SolverBudgetExceeded("wall-clock budget exhausted")
    finally:
        if stats is not None:
            stats["decisions"] = stats.get("decisions", 0) + solver.decisions
            stats["conflicts"] = stats.get("conflicts", 0) + solver.conflicts
