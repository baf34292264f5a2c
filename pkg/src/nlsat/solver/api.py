"""Entry point: decide a set of sentences of one fragment."""

from __future__ import annotations

import time
from typing import Sequence

from ..grammar import FRAGMENTS, AbstractSentence, Vocabulary, check_fragment
from ..logic.formula import Formula
from ..logic.normal import NormalTheory, Signature, normalize
from ..logic.translate import translate
from .certificate import TIMEOUT, SolverTimeout, Verdict
from .cnf import SolverBudgetExceeded
from .typed import solve_typed
from .unary import solve_s, solve_w

DEFAULT_WALL_SECONDS = 30.0
DEFAULT_MAX_NODES = 10_000_000


class MixedFragment(ValueError):
    pass


def sentence_fragment(sentences: Sequence[AbstractSentence], fragment: str | None = None) -> str:
    """The common fragment of ``sentences``; raises MixedFragment otherwise."""
    tags = {s.fragment for s in sentences}
    if len(tags) > 1:
        raise MixedFragment(f"sentences from several fragments: {', '.join(sorted(tags))}")
    tag = tags.pop() if tags else fragment
    if tag is None:
        raise ValueError("fragment must be given for an empty sentence set")
    if fragment is not None:
        check_fragment(fragment)
        widest = max((FRAGMENTS.index(s.template.family) for s in sentences), default=0)
        if widest > FRAGMENTS.index(fragment) or tag != fragment:
            raise MixedFragment(f"sentences are not all in fragment {fragment}")
    return tag


def solve_theory(theory: NormalTheory, fragment: str, *, wall_seconds: float | None = DEFAULT_WALL_SECONDS,
                 max_nodes: int | None = DEFAULT_MAX_NODES) -> Verdict:
    check_fragment(fragment)
    start = time.perf_counter()
    deadline = None if wall_seconds is None else time.monotonic() + wall_seconds
    try:
        if fragment == "S":
            return solve_s(theory)
        if fragment == "W":
            return solve_w(theory, max_decisions=max_nodes, deadline=deadline)
        return solve_typed(theory, max_nodes=max_nodes, deadline=deadline)
    except (SolverTimeout, SolverBudgetExceeded) as exc:
        return Verdict(TIMEOUT, stats={"reason": str(exc), "seconds": time.perf_counter() - start})


def solve_formulas(formulas: Sequence[Formula], fragment: str, signature: Signature | None = None,
                   **budgets) -> Verdict:
    return solve_theory(normalize(formulas, signature), fragment, **budgets)


def solve(sentences: Sequence[AbstractSentence], fragment: str | None = None, *,
          vocab: Vocabulary | None = None, **budgets) -> Verdict:
    """Decide ``sentences``: S by 2-SAT, W by CNF per realizer, V/Z/A by types.

    Budgets: ``wall_seconds`` (default 30) and ``max_nodes`` (default 10^7);
    running out gives a ``timeout`` verdict.
    """
    tag = sentence_fragment(sentences, fragment)
    vocab = vocab or Vocabulary.default()
    return solve_formulas([translate(s, vocab) for s in sentences], tag, **budgets)
