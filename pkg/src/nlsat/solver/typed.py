"""Type-based satisfiability for the fragments with verbs (V, Z, A).

An element is described by its unary type (one bit per unary predicate).
Binary atoms between two elements, and an element's diagonal atoms
``r(a,a)``, are chosen separately: they only need to satisfy the guard
clauses (and, for a realizer's element, its obligations) instantiated on
those elements. Since no fragment has equality, any element can be
duplicated by copying its links and taking its diagonal for the link with
its copy. Hence a theory is satisfiable iff there is a nonempty set ``T``
of types such that

* every type in ``T`` is consistent (unary clauses hold and some diagonal
  satisfies the guard clauses at ``y = x``);
* every two distinct types in ``T`` admit a link;
* every witness requirement applying to a type in ``T`` has a target type
  in ``T`` with a link satisfying the requirement;
* every plain realizer has a type in ``T``; every realizer with an
  obligation or one-shot requirement (a *special*) has a type in ``T``
  admitting a diagonal and links to all of ``T`` and to the other specials
  that respect its obligations, plus targets for its own requirements.

All the local questions (is a link possible, given the unary types at both
ends?) are small propositional problems over ``2 * n2`` link bits; they are
grouped by which residual clauses are active, so each distinct one is
solved once. The choice of ``T`` and of the specials' types is then a
single CNF problem. A model of that CNF is turned into an explicit finite
structure by circular witnessing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..logic.normal import Clause, Lit, NormalTheory
from .certificate import SAT, UNSAT, ModelCertificate, SolverTimeout, Verdict
from .cnf import CnfFormula, SolverBudgetExceeded, cnf_sat

# a residual clause over link (or diagonal) bits, DIMACS style
Residual = tuple[int, ...]


class _Budget:
    def __init__(self, max_nodes: int | None, deadline: float | None):
        self.max_nodes, self.deadline = max_nodes, deadline
        self.nodes = 0
        self.stats: dict = {}

    def tick(self, n: int = 1):
        self.nodes += n
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise SolverTimeout(f"node budget {self.max_nodes} exhausted")
        if self.deadline is not None and (self.nodes & 63) == 0 and time.monotonic() > self.deadline:
            raise SolverTimeout("wall-clock budget exhausted")

    def check_clock(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SolverTimeout("wall-clock budget exhausted")

    def sat(self, cnf: CnfFormula, phase: bool = True):
        remaining = None if self.max_nodes is None else max(1, self.max_nodes - self.nodes)
        before = self.stats.get("decisions", 0)
        try:
            return cnf_sat(cnf, phase=phase, max_decisions=remaining, deadline=self.deadline,
                           stats=self.stats)
        except SolverBudgetExceeded as exc:
            raise SolverTimeout(str(exc)) from None
        finally:
            self.nodes += self.stats.get("decisions", 0) - before


def _small_sat(clauses: list[Residual], nvars: int, budget: _Budget) -> list[bool] | None:
    """Unit propagation, falling back to the CNF engine for what remains."""
    budget.tick()
    value: dict[int, bool] = {}
    pending = list(clauses)
    changed = True
    while changed:
        changed = False
        rest = []
        for c in pending:
            open_lits = []
            satisfied = False
            for l in c:
                v = value.get(abs(l))
                if v is None:
                    open_lits.append(l)
                elif v == (l > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if not open_lits:
                return None
            if len(open_lits) == 1:
                l = open_lits[0]
                value[abs(l)] = l > 0
                changed = True
            else:
                rest.append(tuple(open_lits))
        pending = rest
    if pending:
        model = budget.sat(CnfFormula(nvars, tuple(pending)))
        if model is None:
            return None
        for v in range(1, nvars + 1):
            value.setdefault(v, model[v - 1])
    return [value.get(v, False) for v in range(1, nvars + 1)]


def _lit_true(l: Lit, types: np.ndarray) -> np.ndarray:
    return types[:, l.pred] == l.positive


def _any_true(lits, types: np.ndarray) -> np.ndarray:
    out = np.zeros(types.shape[0], dtype=bool)
    for l in lits:
        out |= _lit_true(l, types)
    return out


def _all_true(lits, types: np.ndarray) -> np.ndarray:
    out = np.ones(types.shape[0], dtype=bool)
    for l in lits:
        out &= _lit_true(l, types)
    return out


def _residual(clause: Clause, orient: str) -> Residual:
    # link bits for an ordered pair (a, b): 1 + 2k is r(a,b), 2 + 2k is r(b,a);
    # orientation "A" reads x as a, "B" reads x as b
    out = []
    for l in clause:
        if not l.binary:
            continue
        forward = (l.kind == "xy") == (orient == "A")
        var = 1 + 2 * l.pred + (0 if forward else 1)
        out.append(var if l.positive else -var)
    return tuple(out)


def _diag_residual(clause: Clause) -> Residual:
    return tuple((l.pred + 1) if l.positive else -(l.pred + 1) for l in clause if l.binary)


@dataclass
class _Table:
    """Outcome of a family of link problems indexed by (row type, column type)."""
    residuals: list[Residual]
    inverse: np.ndarray        # (nr, nc) key index
    keys: list[tuple[int, ...]]  # active residual indices per key

    def clauses(self, key: int) -> list[Residual]:
        return [self.residuals[i] for i in self.keys[key]]


def _group(active: np.ndarray, shape: tuple[int, ...]) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Group cells by their set of active residual clauses."""
    n = int(np.prod(shape))
    if active.shape[0] == 0:
        return np.zeros(shape, dtype=np.int64), [()]
    flat = active.reshape(active.shape[0], n).T
    packed = np.packbits(flat, axis=1)
    uniq, inverse = np.unique(packed, axis=0, return_inverse=True)
    bits = np.unpackbits(uniq, axis=1)[:, : active.shape[0]].astype(bool)
    keys = [tuple(np.flatnonzero(row).tolist()) for row in bits]
    return inverse.reshape(shape), keys


def _pair_table(families, rows: np.ndarray, cols: np.ndarray) -> _Table:
    """``families``: (clauses, orientation) with orientation "A" (x = row) or "B" (x = column)."""
    residuals, actives = [], []
    for clauses, orient in families:
        for c in clauses:
            xs = [l for l in c if l.kind == "x"]
            ys = [l for l in c if l.kind == "y"]
            if orient == "A":
                sat = _any_true(xs, rows)[:, None] | _any_true(ys, cols)[None, :]
            else:
                sat = _any_true(ys, rows)[:, None] | _any_true(xs, cols)[None, :]
            residuals.append(_residual(c, orient))
            actives.append(~sat)
    shape = (rows.shape[0], cols.shape[0])
    active = np.array(actives, dtype=bool).reshape(len(actives), *shape)
    inverse, keys = _group(active, shape)
    return _Table(residuals, inverse, keys)


def _diag_table(clauses, types: np.ndarray) -> _Table:
    residuals, actives = [], []
    for c in clauses:
        unary = [l for l in c if not l.binary]
        actives.append(~_any_true(unary, types))
        residuals.append(_diag_residual(c))
    active = np.array(actives, dtype=bool).reshape(len(actives), types.shape[0])
    inverse, keys = _group(active, (types.shape[0],))
    return _Table(residuals, inverse, keys)


class _Solved:
    """Cache of small SAT results keyed by clause sets."""

    def __init__(self, nvars: int, budget: _Budget):
        self.nvars, self.budget = nvars, budget
        self.cache: dict[frozenset, list[bool] | None] = {}

    def __call__(self, clauses) -> list[bool] | None:
        key = frozenset(clauses)
        if key not in self.cache:
            self.cache[key] = _small_sat(list(key), self.nvars, self.budget)
        return self.cache[key]

    def table(self, t: _Table, extra: tuple[Residual, ...] = ()) -> tuple[np.ndarray, list]:
        models = [self(t.clauses(k) + list(extra)) for k in range(len(t.keys))]
        ok = np.array([m is not None for m in models], dtype=bool)
        return ok[t.inverse], models


class _Cnf:
    def __init__(self):
        self.n = 0
        self.clauses: list[tuple[int, ...]] = []

    def new(self, k: int) -> np.ndarray:
        out = np.arange(self.n + 1, self.n + k + 1)
        self.n += k
        return out

    def add(self, clause):
        self.clauses.append(tuple(int(x) for x in clause))

    def add_pairs(self, a: np.ndarray, b: np.ndarray):
        """Clauses (-a[i] | -b[i])."""
        self.clauses.extend(zip((-a).tolist(), (-b).tolist()))


def _units(lits) -> tuple[Residual, ...]:
    return tuple(r for r in (_residual((l,), "A") for l in lits if l.binary))


def solve_typed(theory: NormalTheory, *, max_nodes: int | None = None,
                deadline: float | None = None) -> Verdict:
    """Decide a theory from fragment V, Z or A; see the module docstring."""
    start = time.perf_counter()
    budget = _Budget(max_nodes, deadline)
    try:
        return _solve(theory, budget, start)
    finally:
        budget.stats["nodes"] = budget.nodes


def _solve(th: NormalTheory, budget: _Budget, start: float) -> Verdict:
    sig = th.signature
    n1, n2 = sig.n1, sig.n2
    stats = budget.stats
    stats["strategy"] = "types"

    def unsat(reason: str) -> Verdict:
        stats.update(reason=reason, seconds=time.perf_counter() - start)
        return Verdict(UNSAT, stats=dict(stats))

    codes = np.arange(1 << n1)
    all_types = ((codes[:, None] >> np.arange(n1)[None, :]) & 1).astype(bool)
    guards = list(th.guard_clauses)
    solved_diag = _Solved(max(n2, 1), budget)
    solved_link = _Solved(max(2 * n2, 1), budget)

    # consistent types
    ok = np.ones(len(codes), dtype=bool)
    for c in th.unary_clauses:
        ok &= _any_true(c, all_types)
    dtab = _diag_table(guards, all_types)
    diag_ok, diag_models = solved_diag.table(dtab)
    cand = np.flatnonzero(ok & diag_ok)
    diag_key = dtab.inverse
    stats["types_consistent"] = int(cand.size)
    if cand.size == 0:
        return unsat("no consistent type")
    types = all_types[cand]
    nc = cand.size
    budget.check_clock()

    # ordinary pairs and witnesses
    pair = _pair_table([(guards, "A"), (guards, "B")], types, types)
    pair_ok, pair_models = solved_link.table(pair)
    witnesses = list(th.witnesses)
    w_apply = [_all_true(w.guard, types) for w in witnesses]
    w_target = [_all_true([l for l in w.body if l.kind == "y"], types) for w in witnesses]
    w_ok, w_models = [], []
    for w, app, tgt in zip(witnesses, w_apply, w_target):
        okw, models = solved_link.table(pair, _units(w.body))
        w_ok.append(okw & app[:, None] & tgt[None, :])
        w_models.append(models)
    budget.check_clock()

    # specials
    specials = [i for i, r in enumerate(th.realizers) if r.obligations or r.one_shots]
    plain = [i for i, r in enumerate(th.realizers) if not (r.obligations or r.one_shots)]
    sp = {}
    for i in specials:
        r = th.realizers[i]
        lits_ok = _all_true(r.lits, types)
        dtab = _diag_table(guards + list(r.obligations), types)
        d_ok, d_models = solved_diag.table(dtab)
        elig = np.flatnonzero(lits_ok & d_ok)
        if elig.size == 0:
            return unsat(f"realizer {i} has no consistent type")
        rows = types[elig]
        so = _pair_table([(guards, "A"), (guards, "B"), (r.obligations, "A")], rows, types)
        so_ok, so_models = solved_link.table(so)
        reqs = []  # (kind, index, applies per elig row, ok (ne, nc), models)
        for j, w in enumerate(witnesses):
            okw, models = solved_link.table(so, _units(w.body))
            reqs.append(("w", j, w_apply[j][elig], okw & w_target[j][None, :], models))
        for k, body in enumerate(r.one_shots):
            tgt = _all_true([l for l in body if l.kind == "y"], types)
            okb, models = solved_link.table(so, _units(body))
            reqs.append(("o", k, np.ones(elig.size, dtype=bool), okb & tgt[None, :], models))
        sp[i] = dict(elig=elig, diag_key=dtab.inverse, diag_models=d_models, table=so,
                     ok=so_ok, models=so_models, reqs=reqs)
        budget.check_clock()
    ss = {}
    for a_pos, a in enumerate(specials):
        for b in specials[a_pos + 1:]:
            ra, rb = th.realizers[a], th.realizers[b]
            tab = _pair_table([(guards, "A"), (guards, "B"), (ra.obligations, "A"), (rb.obligations, "B")],
                              types[sp[a]["elig"]], types[sp[b]["elig"]])
            okp, models = solved_link.table(tab)
            ss[a, b] = (tab, okp, models)
        budget.check_clock()

    # choose T and the specials' types
    cnf = _Cnf()
    t = cnf.new(nc)
    cnf.add(t)
    iu, ju = np.nonzero(np.triu(~pair_ok, 1))
    cnf.add_pairs(t[iu], t[ju])
    for okw, app in zip(w_ok, w_apply):
        for u in np.flatnonzero(app):
            cnf.add([-t[u]] + t[okw[u]].tolist())
    for i in plain:
        cnf.add(t[_all_true(th.realizers[i].lits, types)])
    e = {}
    for i in specials:
        s = sp[i]
        ev = cnf.new(s["elig"].size)
        e[i] = ev
        cnf.add(ev)
        cnf.add_pairs(ev, -t[s["elig"]])  # e -> t
        ri, cj = np.nonzero(~s["ok"])
        cnf.add_pairs(ev[ri], t[cj])
        for _, _, app, okr, _ in s["reqs"]:
            for row in np.flatnonzero(app):
                cnf.add([-ev[row]] + t[okr[row]].tolist())
    for (a, b), (_, okp, _) in ss.items():
        ri, cj = np.nonzero(~okp)
        cnf.add_pairs(e[a][ri], e[b][cj])
    stats["cnf_vars"], stats["cnf_clauses"] = cnf.n, len(cnf.clauses)
    model = budget.sat(CnfFormula(cnf.n, tuple(cnf.clauses)), phase=False)
    if model is None:
        return unsat("no type set")
    chosen = np.array([model[v - 1] for v in t], dtype=bool)

    # prune to what realizers and witness chains need
    def lowest(mask: np.ndarray) -> int:
        return int(np.flatnonzero(mask & chosen)[0])

    sp_type = {i: int(sp[i]["elig"][np.flatnonzero([model[v - 1] for v in e[i]])[0]]) for i in specials}
    plain_type = {i: lowest(_all_true(th.realizers[i].lits, types)) for i in plain}
    sp_targets = {}
    need = set(sp_type.values()) | set(plain_type.values())
    for i in specials:
        row = int(np.searchsorted(sp[i]["elig"], sp_type[i]))
        targets = []
        for kind, idx, app, okr, _ in sp[i]["reqs"]:
            if app[row]:
                v = lowest(okr[row])
                targets.append((kind, idx, v))
                need.add(v)
        sp_targets[i] = targets
    if not need:
        need.add(lowest(np.ones(nc, dtype=bool)))
    queue = sorted(need)
    w_targets: dict[int, list[tuple[int, int]]] = {}
    while queue:
        u = queue.pop()
        targets = []
        for j, (okw, app) in enumerate(zip(w_ok, w_apply)):
            if app[u]:
                v = lowest(okw[u])
                targets.append((j, v))
                if v not in need:
                    need.add(v)
                    queue.append(v)
        w_targets[u] = targets
    members = sorted(need)
    stats["types_used"] = len(members)

    cert = _build(th, types, members, specials, sp, sp_type, sp_targets, ss, plain, plain_type,
                  w_targets, w_models, pair, pair_models, solved_link, diag_key, diag_models, cand)
    stats.update(domain=cert.d, seconds=time.perf_counter() - start)
    return Verdict(SAT, cert, dict(stats))


def _link_model(table: _Table, models, r: int, c: int) -> list[bool]:
    return models[int(table.inverse[r, c])]


def _build(th, types, members, specials, sp, sp_type, sp_targets, ss, plain, plain_type,
           w_targets, w_models, pair, pair_models, solved_link, diag_key, diag_models, cand):
    sig = th.signature
    n2 = sig.n2
    k = max((len(w_targets[u]) for u in members), default=0)
    reqs = max((len(v) for v in sp_targets.values()), default=0)
    groups = max(2 * k + 1, reqs, 1)
    ns = len(specials)
    pos = {u: p for p, u in enumerate(members)}
    d = ns + len(members) * groups

    def elem(u: int, g: int) -> int:
        return ns + pos[u] * groups + g % groups

    unary = np.zeros((d, sig.n1), dtype=bool)
    binary = np.zeros((n2, d, d), dtype=bool)
    etype = np.zeros(d, dtype=np.int64)

    def put(a: int, b: int, bits: list[bool]):
        for r in range(n2):
            binary[r, a, b] = bits[2 * r]
            binary[r, b, a] = bits[2 * r + 1]

    def block(u: int) -> slice:
        return slice(ns + pos[u] * groups, ns + (pos[u] + 1) * groups)

    for si, i in enumerate(specials):
        u = sp_type[i]
        unary[si] = types[u]
        etype[si] = u
        dmodel = sp[i]["diag_models"][int(sp[i]["diag_key"][u])]
        binary[:, si, si] = dmodel[:n2]
    for u in members:
        unary[block(u)] = types[u]
        etype[block(u)] = u
        dmodel = diag_models[int(diag_key[cand[u]])]
        # same-type ordinary elements copy the diagonal
        binary[:, block(u), block(u)] = np.asarray(dmodel[:n2], dtype=bool)[:, None, None]
    for u in members:
        for v in members:
            if u < v:
                bits = _link_model(pair, pair_models, u, v)
                for r in range(n2):
                    binary[r, block(u), block(v)] = bits[2 * r]
                    binary[r, block(v), block(u)] = bits[2 * r + 1]
    for si, i in enumerate(specials):
        row = int(np.searchsorted(sp[i]["elig"], sp_type[i]))
        for v in members:
            bits = _link_model(sp[i]["table"], sp[i]["models"], row, v)
            for r in range(n2):
                binary[r, si, block(v)] = bits[2 * r]
                binary[r, block(v), si] = bits[2 * r + 1]
    for sa, a in enumerate(specials):
        for sb in range(sa + 1, ns):
            b = specials[sb]
            tab, _, models = ss[a, b]
            ra = int(np.searchsorted(sp[a]["elig"], sp_type[a]))
            rb = int(np.searchsorted(sp[b]["elig"], sp_type[b]))
            put(sa, sb, _link_model(tab, models, ra, rb))

    witnesses = {}
    for u in members:
        for idx, (j, v) in enumerate(w_targets[u]):
            bits = _link_model(pair, w_models[j], u, v)
            for g in range(groups):
                a, b = elem(u, g), elem(v, g + idx + 1)
                put(a, b, bits)
                witnesses[a, j] = b
    one_shots = {}
    for si, i in enumerate(specials):
        row = int(np.searchsorted(sp[i]["elig"], sp_type[i]))
        models = {(kind, idx): m for kind, idx, _, _, m in sp[i]["reqs"]}
        for n, (kind, idx, v) in enumerate(sp_targets[i]):
            b = elem(v, n)
            put(si, b, _link_model(sp[i]["table"], models[kind, idx], row, v))
            if kind == "w":
                witnesses[si, idx] = b
            else:
                one_shots[i, idx] = b

    realizers = [0] * len(th.realizers)
    for si, i in enumerate(specials):
        realizers[i] = si
    for i in plain:
        realizers[i] = elem(plain_type[i], 0)
    return ModelCertificate(sig, unary, binary, tuple(realizers), witnesses, one_shots)
