import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsat.grammar import FRAGMENTS, AbstractSentence, Template, fragment_templates, parse, sample_sentence
from nlsat.logic import (
    And, Atom, Exists, Forall, Fo2Form, FolSyntaxError, Implies, Lit, Not, Or, Signature,
    UnrecognizedShape, lower_fo2_form, normalize, parse_fol, render_fol, to_smtlib, translate,
)
from lowering_cases import lowering_case
from nlsat.logic.formula import free_variables, variables
from nlsat.solver import ModelCertificate, ground_check, model_check


def _fol(text, vocab, fragment="A"):
    return render_fol(translate(parse(text, fragment, vocab), vocab))


def test_translate_examples(vocab):
    assert _fol("Every non-artist is a beekeeper", vocab) == "all x. (~artist(x) -> beekeeper(x))"
    assert _fol("Every scholar loves some musician", vocab) == \
        "all x. (scholar(x) -> exists y. (musician(y) & love(x,y)))"
    assert _fol("Some scholar loves no musician", vocab) == \
        "exists x. (scholar(x) & all y. (musician(y) -> ~love(x,y)))"
    assert _fol("Every carpenter who admires some writer is an electrician", vocab) == \
        "all x. ((carpenter(x) & exists y. (writer(y) & admire(x,y))) -> electrician(x))"
    assert _fol("Some artist hates no beekeeper who admires him", vocab) == \
        "exists x. (artist(x) & all y. ((beekeeper(y) & admire(y,x)) -> ~hate(x,y)))"


def test_translate_no_and_negations(vocab):
    f = translate(parse("No artist is a baker", "S", vocab), vocab)
    assert f == Forall("x", Implies(Atom("artist", ("x",)), Not(Atom("baker", ("x",)))))
    f = translate(parse("Some artist is not a non-baker", "S", vocab), vocab)
    assert f == Exists("x", And((Atom("artist", ("x",)), Atom("baker", ("x",)))))
    f = translate(parse("No artist admires any baker", "V", vocab), vocab)
    assert render_fol(f) == "all x. (artist(x) -> all y. (baker(y) -> ~admire(x,y)))"
    f = translate(parse("Some artist does not admire every baker", "V", vocab), vocab)
    assert render_fol(f) == "exists x. (artist(x) & exists y. (baker(y) & ~admire(x,y)))"


@pytest.mark.parametrize("fragment", FRAGMENTS)
def test_every_template_translates_closed_two_variable(fragment, vocab):
    for t in fragment_templates(fragment):
        slots = tuple(i for i, _ in enumerate(t.slot_names))
        f = translate(AbstractSentence(fragment, t, slots), vocab)
        assert variables(f) <= {"x", "y"}
        assert free_variables(f) == set()
        assert parse_fol(render_fol(f)) == f


def test_render_direct():
    f = Forall("x", Implies(Not(Atom("p", ("x",))), Atom("q", ("x",))))
    assert render_fol(f) == "all x. (~p(x) -> q(x))"


def test_parse_fol_errors():
    with pytest.raises(FolSyntaxError) as e:
        parse_fol("all x. (p(x)")
    assert e.value.pos == 12
    with pytest.raises(FolSyntaxError):
        parse_fol("p(x) &")
    with pytest.raises(FolSyntaxError):
        parse_fol("all . p(x)")


def test_fol_roundtrip_corpus(vocab):
    rng = np.random.default_rng(3)
    for k in range(10_000):
        fragment = FRAGMENTS[k % 5]
        s = sample_sentence(fragment, ([1, 2, 3], [4, 5]), rng)
        f = translate(s, vocab)
        text = render_fol(f)
        assert parse_fol(text) == f
        assert render_fol(parse_fol(text)) == text


def test_fol_parse_precedence():
    f = parse_fol("~p(x) & q(x) | r(x) -> s(x) -> t(x)")
    assert isinstance(f, Implies) and isinstance(f.right, Implies)
    assert isinstance(f.left, Or) and isinstance(f.left.args[0], And)


# ---------------------------------------------------------------------------
# normal form

def test_normalize_guard_clause(vocab):
    th = normalize([translate(parse("No artist admires any baker", "V", vocab), vocab)])
    assert th.guard_clauses == ((Lit("x", 0, False), Lit("y", 1, False), Lit("xy", 0, False)),)
    assert not th.unary_clauses and not th.witnesses and not th.realizers


def test_normalize_every_who_every(vocab):
    th = normalize([translate(parse("Every artist who admires every baker is a carpenter", "Z", vocab), vocab)])
    (w,) = th.witnesses
    sig = th.signature
    a, b, c = (sig.unary.index(n) for n in ("artist", "baker", "carpenter"))
    assert set(w.guard) == {Lit("x", a, True), Lit("x", c, False)}
    assert set(w.body) == {Lit("y", b, True), Lit("xy", 0, False)}


def test_normalize_showcase_unsat_set(vocab):
    texts = ["Every scholar loves some artist", "Every artist is a musician", "Some scholar loves no musician"]
    th = normalize([translate(parse(t, "V", vocab), vocab) for t in texts])
    assert len(th.witnesses) == 1 and len(th.unary_clauses) == 1
    (r,) = th.realizers
    sig = th.signature
    mus = sig.unary.index("musician")
    assert r.obligations == ((Lit("y", mus, False), Lit("xy", 0, False)),)


def test_normalize_rejects_foreign_shapes():
    with pytest.raises(UnrecognizedShape):
        normalize([parse_fol("all x. all y. all x. p(x)")])
    with pytest.raises(UnrecognizedShape):
        normalize([parse_fol("p(x)")])


def _lit_val(l, u, b, x, y):
    if l.kind == "x":
        v = u[x, l.pred]
    elif l.kind == "y":
        v = u[y, l.pred]
    elif l.kind == "xy":
        v = b[l.pred, x, y]
    else:
        v = b[l.pred, y, x]
    return bool(v) == l.positive


def theory_holds(th, u, b):
    """Direct evaluation of a normal theory on a finite structure."""
    d = u.shape[0]
    dom = range(d)
    clause = lambda c, x, y: any(_lit_val(l, u, b, x, y) for l in c)
    conj = lambda ls, x, y: all(_lit_val(l, u, b, x, y) for l in ls)
    if not all(clause(c, x, x) for c in th.unary_clauses for x in dom):
        return False
    if not all(clause(c, x, y) for c in th.guard_clauses for x in dom for y in dom):
        return False
    for w in th.witnesses:
        for x in dom:
            if conj(w.guard, x, x) and not any(conj(w.body, x, y) for y in dom):
                return False
    for r in th.realizers:
        if not any(conj(r.lits, x, x)
                   and all(clause(c, x, y) for c in r.obligations for y in dom)
                   and all(any(conj(o, x, y) for y in dom) for o in r.one_shots)
                   for x in dom):
            return False
    return True


def _structures(n1, n2, d):
    bits = d * n1 + n2 * d * d
    for k in range(2 ** bits):
        v = np.array([(k >> i) & 1 for i in range(bits)], dtype=bool)
        yield ModelCertificate(Signature(tuple(f"u{i}" for i in range(n1)), tuple(f"r{i}" for i in range(n2))),
                               v[: d * n1].reshape(d, n1), v[d * n1:].reshape(n2, d, d))


def _rename(f, names):
    if isinstance(f, Atom):
        return Atom(names[f.pred], f.args)
    if isinstance(f, Not):
        return Not(_rename(f.arg, names))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_rename(a, names) for a in f.args))
    if isinstance(f, Implies):
        return Implies(_rename(f.left, names), _rename(f.right, names))
    return type(f)(f.var, _rename(f.body, names))


@pytest.mark.parametrize("fragment", ["V", "Z", "A"])
def test_normalize_preserves_semantics_exhaustively(fragment, vocab):
    # every template, all structures of size 1 and 2 over 2 nouns and 1 verb,
    # and size-3 structures at random
    sig = Signature(("u0", "u1"), ("r0",))
    structures = list(_structures(2, 1, 1)) + list(_structures(2, 1, 2))
    rng = np.random.default_rng(1)
    for _ in range(40):
        structures.append(ModelCertificate(sig, rng.random((3, 2)) < 0.5, rng.random((1, 3, 3)) < 0.5))
    for t in fragment_templates(fragment):
        if t.family != fragment and fragment != "V":
            continue
        slots = tuple(0 if n in "rs" else i % 2 for i, n in enumerate(t.slot_names))
        names = {vocab.nouns[0].surface: "u0", vocab.nouns[1].surface: "u1", vocab.verbs[0].base: "r0"}
        f = _rename(translate(AbstractSentence(fragment, t, slots), vocab), names)
        th = normalize([f], sig)
        for m in structures:
            assert model_check(m, [f]) == theory_holds(th, m.unary, m.binary), (t.id, m)


# ---------------------------------------------------------------------------
# SMT-LIB

def test_smtlib_layout():
    f = parse_fol("all x. (~p(x) -> q(x))")
    assert to_smtlib([f]) == (
        "(set-logic UF)\n(declare-sort U 0)\n(declare-fun p (U) Bool)\n(declare-fun q (U) Bool)\n"
        "(assert (forall ((x U)) (=> (not (p x)) (q x))))\n(check-sat)\n")
    assert to_smtlib([]) == "(set-logic UF)\n(declare-sort U 0)\n(check-sat)\n"


def test_smtlib_quotes_reserved_names():
    text = to_smtlib([parse_fol("exists x. and(x)")])
    assert "(declare-fun |and| (U) Bool)" in text


def test_smtlib_z3_agrees_on_showcase_sets(vocab):
    z3 = pytest.importorskip("z3")
    for texts, expected in (
        (["Every scholar loves some artist", "Every artist is a musician", "Some scholar loves no musician"], z3.unsat),
        (["Some scholar loves every musician", "Every musician is an artist", "Every artist loves some scholar"], z3.sat),
        ([], z3.sat),
    ):
        s = z3.Solver()
        s.from_string(to_smtlib([translate(parse(t, "V", vocab), vocab) for t in texts]))
        assert s.check() == expected


# ---------------------------------------------------------------------------
# lowering

def test_lowering_form1_text(vocab):
    n = vocab.noun_index
    low = lower_fo2_form(Fo2Form(1, literals=((n["artist"], True), (n["baker"], False))), vocab)
    from nlsat.grammar import realize
    assert [realize(s, low.vocab) for s in low.sentences] == [
        "Some pstar0 is a pstar0", "Every pstar0 is an artist", "Every pstar0 is a non-baker"]


def test_lowering_form5_single_sentence(vocab):
    from nlsat.grammar import realize
    n, v = vocab.noun_index, vocab.verb_index
    low = lower_fo2_form(Fo2Form(5, p=(n["artist"], True), q=(n["baker"], True), verb=v["admire"],
                                 verb_positive=False), vocab)
    assert [realize(s, low.vocab) for s in low.sentences] == ["No artist admires any baker"]
    assert all(s.fragment == "A" for s in low.sentences)


def test_lowering_form3_rejects_empty():
    with pytest.raises(ValueError):
        Fo2Form(3)


def test_lowering_equisatisfiable_small(vocab):
    rng = np.random.default_rng(17)
    outcomes = set()
    for _ in range(60):
        spec, a, b = lowering_case(rng, vocab)
        assert a == b, spec
        outcomes.add(a)
    assert outcomes == {True, False}


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_two_variable_bound_property(seed):
    rng = np.random.default_rng(seed)
    fragment = FRAGMENTS[seed % 5]
    s = sample_sentence(fragment, ([0, 1, 2], [0, 1]), rng)
    f = translate(s)
    assert variables(f) <= {"x", "y"} and not free_variables(f)
