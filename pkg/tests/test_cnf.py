import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsat.solver.cnf import CnfFormula, CnfSolver, SolverBudgetExceeded, cnf_sat


def brute(n, clauses):
    for bits in itertools.product((False, True), repeat=n):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return True
    return False


def satisfies(model, clauses):
    return all(any(model[abs(l) - 1] == (l > 0) for l in c) for c in clauses)


def test_unit_propagation_example():
    assert cnf_sat(CnfFormula(2, ((1, 2), (-1,)))) == [False, True]


def test_trivial_cases():
    assert cnf_sat(CnfFormula(1, ((1,), (-1,)))) is None
    assert cnf_sat(CnfFormula(0, ())) == []
    assert cnf_sat(CnfFormula(1, ((),))) is None
    # tautologies and repeated literals
    assert cnf_sat(CnfFormula(2, ((1, -1), (2, 2), (-2, 1)))) == [True, True]


def test_from_clauses_infers_size():
    f = CnfFormula.from_clauses([[1, -4], [2]])
    assert f.num_vars == 4


def test_rejects_out_of_range_literals():
    with pytest.raises(ValueError):
        CnfFormula(2, ((3,),))
    with pytest.raises(ValueError):
        CnfFormula(2, ((0,),))


def test_assumptions():
    f = CnfFormula(3, ((1, 2), (-1, 3)))
    m = cnf_sat(f, [1])
    assert m[0] and m[2]
    assert cnf_sat(f, [1, -3]) is None
    assert cnf_sat(f, [-1, -2]) is None


def test_random_3cnf_against_enumeration():
    # n=20, m=60: the verdict matches exhaustive search on 100 seeds
    n, m = 20, 60
    # column v holds bit v of every assignment 0 .. 2^n - 1, packed 8 per byte
    codes = np.arange(2 ** n, dtype=np.uint32)
    cols = [np.packbits(((codes >> v) & 1).astype(bool)) for v in range(n)]
    for seed in range(100):
        rng = np.random.default_rng(seed)
        clauses = []
        for _ in range(m):
            vs = rng.choice(n, 3, replace=False)
            clauses.append(tuple(int(v + 1) * int(s) for v, s in zip(vs, rng.choice([-1, 1], 3))))
        ok = np.full(len(cols[0]), 0xFF, dtype=np.uint8)
        for c in clauses:
            sat_c = np.zeros_like(ok)
            for l in c:
                sat_c |= cols[l - 1] if l > 0 else ~cols[-l - 1]
            ok &= sat_c
        model = cnf_sat(CnfFormula(n, tuple(clauses)))
        assert (model is not None) == bool(ok.any())
        if model is not None:
            assert satisfies(model, clauses)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.lists(st.integers(1, n).flatmap(lambda v: st.sampled_from([v, -v])), min_size=1, max_size=4),
             max_size=30))))
def test_random_cnf_property(case):
    n, clauses = case
    model = cnf_sat(CnfFormula(n, tuple(tuple(c) for c in clauses)))
    assert (model is not None) == brute(n, clauses)
    if model is not None:
        assert satisfies(model, clauses)


def test_budget_exceeded():
    # pigeonhole 8 into 7 needs many decisions
    n_p, n_h = 8, 7
    var = lambda p, h: p * n_h + h + 1
    clauses = [tuple(var(p, h) for h in range(n_h)) for p in range(n_p)]
    for h in range(n_h):
        for a in range(n_p):
            for b in range(a + 1, n_p):
                clauses.append((-var(a, h), -var(b, h)))
    with pytest.raises(SolverBudgetExceeded):
        cnf_sat(CnfFormula(n_p * n_h, tuple(clauses)), max_decisions=50)


def test_deterministic_and_stats():
    rng = np.random.default_rng(0)
    clauses = tuple(tuple(int(v) for v in (rng.choice(30, 3, replace=False) + 1) * rng.choice([-1, 1], 3))
                    for _ in range(120))
    f = CnfFormula(30, clauses)
    s1, s2 = {}, {}
    assert cnf_sat(f, stats=s1) == cnf_sat(f, stats=s2)
    assert s1 == s2 and "decisions" in s1


def test_incremental_solver_object():
    from nlsat.solver.cnf import SAT
    s = CnfSolver(CnfFormula(2, ((1, 2),)), (), True)
    assert s.step(100) == SAT
    assert satisfies(s.model(), [(1, 2)])
