import itertools
import os
from pathlib import Path

import numpy as np
import pytest

from nlsat.grammar import InstanceParams, Vocabulary, sample_instance

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).resolve().parent / "golden"
REGIONS = ROOT / "regions"

# lines collected by the acceptance tests, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def quick_mode() -> bool:
    return os.environ.get("NLSAT_ACCEPTANCE_QUICK", "") not in ("", "0")


@pytest.fixture(scope="session")
def vocab():
    return Vocabulary.default()


def random_instance(fragment, rng, m, n1, n2=0, **kw):
    return sample_instance(fragment, InstanceParams(m, n1, n2), rng, **kw)


def brute_force_unary(theory):
    """Sat check for a verb-free normal theory by enumerating all 1-types.

    The set U of types allowed by the universal clauses must be non-empty
    and contain, for each realizer, a type meeting its literals.
    """
    n = theory.signature.n1
    allowed = []
    for bits in itertools.product((False, True), repeat=n):
        if all(any(bits[l.pred] == l.positive for l in c) for c in theory.unary_clauses):
            allowed.append(bits)
    if not allowed:
        return False
    return all(any(all(b[l.pred] == l.positive for l in r.lits) for b in allowed)
               for r in theory.realizers)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


SHOWCASE_UNSAT = ["Every scholar loves some artist", "Every artist is a musician",
                "Some scholar loves no musician"]
SHOWCASE_SAT = ["Some scholar loves every musician", "Every musician is an artist",
              "Every artist loves some scholar"]


def formulas_of(sentences, vocab):
    from nlsat.logic import translate
    return [translate(s, vocab) for s in sentences]


def parse_all(texts, fragment, vocab):
    from nlsat.grammar import parse
    return [parse(t, fragment, vocab) for t in texts]
