"""Template grammar for the five controlled-English fragments S, W, V, Z, A.

Each fragment is a finite inventory of sentence templates. A template fixes
the sentence form (determiner, relative clause, verb structure) and every
optional element: ``non-`` on a noun, ``not`` after a copula, ``does not``
before a verb, and the object determiner. Inventories nest:
S is contained in W, W in V, V in Z and Z in A.

Realization and parsing are both driven by :func:`_items`, the token-level
description of a template, so the two cannot drift apart.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

FRAGMENTS = ("S", "W", "V", "Z", "A")

# slot names per form family; o, p, q are nouns, r, s are verbs
SLOT_NAMES = {
    "S": ("p", "q"),
    "W": ("o", "p", "q"),
    "V": ("p", "q", "r"),
    "Z": ("o", "p", "q", "r"),
    "A": ("o", "p", "r", "s"),
}
BINARY_SLOTS = frozenset("rs")

# form -> ordered choice fields; a field is (name, values)
_NEG = (False, True)
FORMS: dict[str, tuple[tuple[str, tuple], ...]] = {
    "S.every": (("subj_neg", _NEG), ("pred_neg", _NEG)),
    "S.no": (("subj_neg", _NEG), ("pred_neg", _NEG)),
    "S.some": (("subj_neg", _NEG), ("cop_neg", _NEG), ("pred_neg", _NEG)),
    "W.every": (("subj_neg", _NEG), ("rel_neg", _NEG), ("pred_neg", _NEG)),
    "W.no": (("subj_neg", _NEG), ("rel_neg", _NEG), ("pred_neg", _NEG)),
    "W.some": (("subj_neg", _NEG), ("rel_neg", _NEG), ("cop_neg", _NEG), ("pred_neg", _NEG)),
    "V.every": (("subj_neg", _NEG), ("obj_det", ("some", "every", "no")), ("obj_neg", _NEG)),
    "V.some": (("subj_neg", _NEG), ("obj_det", ("some", "every", "no")), ("obj_neg", _NEG)),
    "V.no": (("subj_neg", _NEG), ("obj_det", ("any", "every")), ("obj_neg", _NEG)),
    "V.some_not": (("subj_neg", _NEG), ("obj_det", ("any", "every")), ("obj_neg", _NEG)),
    "Z.every": (("subj_neg", _NEG), ("rel_neg", _NEG), ("obj_det", ("some", "every")),
                ("obj_neg", _NEG), ("pred_neg", _NEG)),
    "Z.no": (("subj_neg", _NEG), ("rel_neg", _NEG), ("obj_det", ("any", "every")),
             ("obj_neg", _NEG), ("pred_neg", _NEG)),
    "Z.some": (("subj_neg", _NEG), ("rel_neg", _NEG), ("obj_det", ("some", "every")),
               ("obj_neg", _NEG), ("cop_neg", _NEG), ("pred_neg", _NEG)),
    "A.every": (("subj_neg", _NEG), ("obj_det", ("some", "every", "no")), ("obj_neg", _NEG),
                ("rel_neg", _NEG)),
    "A.some": (("subj_neg", _NEG), ("obj_det", ("some", "every", "no")), ("obj_neg", _NEG),
               ("rel_neg", _NEG)),
    "A.no": (("subj_neg", _NEG), ("obj_det", ("any", "every")), ("obj_neg", _NEG), ("rel_neg", _NEG)),
    "A.some_not": (("subj_neg", _NEG), ("obj_det", ("any", "every")), ("obj_neg", _NEG),
                   ("rel_neg", _NEG)),
}


class ParseError(ValueError):
    pass


class NoTemplateMatch(ParseError):
    pass


class UnknownWord(ParseError):
    def __init__(self, word: str):
        super().__init__(f"unknown word {word!r}")
        self.word = word


class AmbiguousParse(ParseError):
    def __init__(self, text: str, candidates):
        super().__init__(f"{len(candidates)} templates match {text!r}")
        self.candidates = candidates


# ---------------------------------------------------------------------------
# vocabulary

@dataclass(frozen=True)
class Noun:
    surface: str
    article: str  # "a" or "an"


@dataclass(frozen=True)
class Verb:
    base: str
    third: str


@dataclass(frozen=True)
class Vocabulary:
    nouns: tuple[Noun, ...]
    verbs: tuple[Verb, ...]

    def __post_init__(self):
        for kind, words in (("noun", [n.surface for n in self.nouns]),
                            ("verb", [v.base for v in self.verbs])):
            if len(set(words)) != len(words):
                raise ValueError(f"duplicate {kind} surface forms")
        for n in self.nouns:
            if n.article not in ("a", "an"):
                raise ValueError(f"bad article for {n.surface!r}: {n.article!r}")

    @cached_property
    def noun_index(self) -> dict[str, int]:
        return {n.surface: i for i, n in enumerate(self.nouns)}

    @cached_property
    def verb_index(self) -> dict[str, int]:
        return {v.base: i for i, v in enumerate(self.verbs)}

    @cached_property
    def third_index(self) -> dict[str, int]:
        return {v.third: i for i, v in enumerate(self.verbs)}

    @classmethod
    def from_files(cls, noun_path, verb_path) -> "Vocabulary":
        nouns = [Noun(a, b) for a, b in _read_tsv(Path(noun_path).read_text(encoding="utf-8"))]
        verbs = [Verb(a, b) for a, b in _read_tsv(Path(verb_path).read_text(encoding="utf-8"))]
        return cls(tuple(nouns), tuple(verbs))

    @classmethod
    def default(cls) -> "Vocabulary":
        return _default_vocabulary()

    def extended(self, nouns: Sequence[Noun] = (), verbs: Sequence[Verb] = ()) -> "Vocabulary":
        return Vocabulary(self.nouns + tuple(nouns), self.verbs + tuple(verbs))


def _read_tsv(text: str):
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two tab-separated fields")
        rows.append((parts[0].strip(), parts[1].strip()))
    return rows


@lru_cache(maxsize=1)
def _default_vocabulary() -> Vocabulary:
    data = resources.files("nlsat") / "data"
    return Vocabulary(
        tuple(Noun(a, b) for a, b in _read_tsv((data / "nouns.tsv").read_text(encoding="utf-8"))),
        tuple(Verb(a, b) for a, b in _read_tsv((data / "verbs.tsv").read_text(encoding="utf-8"))),
    )


# ---------------------------------------------------------------------------
# templates

@dataclass(frozen=True)
class Template:
    form: str
    subj_neg: bool = False
    rel_neg: bool | None = None
    obj_det: str | None = None
    obj_neg: bool | None = None
    cop_neg: bool | None = None
    pred_neg: bool | None = None

    @property
    def family(self) -> str:
        """The fragment that introduces this template."""
        return self.form[0]

    @property
    def slot_names(self) -> tuple[str, ...]:
        return SLOT_NAMES[self.family]

    @property
    def id(self) -> str:
        parts = [self.form]
        for name, _ in FORMS[self.form]:
            value = getattr(self, name)
            parts.append(value if isinstance(value, str) else f"{name.split('_')[0]}{'-' if value else '+'}")
        return "/".join(parts)


@dataclass(frozen=True)
class AbstractSentence:
    fragment: str
    template: Template
    slots: tuple[int, ...]  # lexicon indices, aligned with template.slot_names

    def __post_init__(self):
        if len(self.slots) != len(self.template.slot_names):
            raise ValueError(f"{self.template.id} takes {len(self.template.slot_names)} slots")
        if FRAGMENTS.index(self.template.family) > FRAGMENTS.index(self.fragment):
            raise ValueError(f"{self.template.id} is not in fragment {self.fragment}")

    def slot(self, name: str) -> int:
        return self.slots[self.template.slot_names.index(name)]

    @property
    def unary_slots(self) -> tuple[int, ...]:
        return tuple(i for n, i in zip(self.template.slot_names, self.slots) if n not in BINARY_SLOTS)

    @property
    def binary_slots(self) -> tuple[int, ...]:
        return tuple(i for n, i in zip(self.template.slot_names, self.slots) if n in BINARY_SLOTS)


@dataclass(frozen=True)
class InstanceParams:
    m: int
    n1: int
    n2: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n1 < 1 or self.n2 < 0:
            raise ValueError(f"invalid parameters m={self.m}, n1={self.n1}, n2={self.n2}")

    @property
    def alpha(self) -> float:
        return self.m / self.n1

    @property
    def beta(self) -> float | None:
        return self.m / self.n2 if self.n2 else None


def check_fragment(fragment: str) -> str:
    if fragment not in FRAGMENTS:
        raise ValueError(f"unknown fragment {fragment!r}; expected one of {', '.join(FRAGMENTS)}")
    return fragment


def _expand(form: str) -> list[Template]:
    names = [n for n, _ in FORMS[form]]
    values = [v for _, v in FORMS[form]]
    return [Template(form, **dict(zip(names, combo))) for combo in itertools.product(*values)]


@lru_cache(maxsize=None)
def fragment_templates(fragment: str) -> tuple[Template, ...]:
    """All templates of ``fragment`` with every optional element expanded.

    Order: fragments S, W, V, Z, A in turn; forms in :data:`FORMS` order;
    within a form, the Cartesian product of its choice fields (False before
    True, determiners in listed order).
    """
    check_fragment(fragment)
    upto = FRAGMENTS[: FRAGMENTS.index(fragment) + 1]
    return tuple(t for form in FORMS if form[0] in upto for t in _expand(form))


@lru_cache(maxsize=None)
def _forms_of(fragment: str) -> tuple[str, ...]:
    upto = FRAGMENTS[: FRAGMENTS.index(fragment) + 1]
    return tuple(f for f in FORMS if f[0] in upto)


def sample_sentence(fragment: str, vocab_subset: tuple[Sequence[int], Sequence[int]],
                    rng: np.random.Generator, *, distinct_slots: bool = False,
                    law: str = "expanded") -> AbstractSentence:
    """Draw one sentence of ``fragment`` over the given noun and verb indices.

    ``law="expanded"`` draws uniformly over the expanded inventory,
    ``law="base"`` draws a form uniformly and then one of its expansions.
    Slots are filled uniformly from the subset, with replacement unless
    ``distinct_slots`` (nouns distinct among nouns, verbs among verbs).
    """
    check_fragment(fragment)
    nouns, verbs = list(vocab_subset[0]), list(vocab_subset[1])
    if not nouns:
        raise ValueError("at least one noun is required")
    if fragment in ("V", "Z", "A") and not verbs:
        raise ValueError(f"fragment {fragment} needs at least one verb")
    if law == "expanded":
        inventory = fragment_templates(fragment)
        template = inventory[int(rng.integers(len(inventory)))]
    elif law == "base":
        forms = _forms_of(fragment)
        options = _expand(forms[int(rng.integers(len(forms)))])
        template = options[int(rng.integers(len(options)))]
    else:
        raise ValueError(f"unknown sampling law {law!r}")
    names = template.slot_names
    n_unary = sum(1 for n in names if n not in BINARY_SLOTS)
    n_binary = len(names) - n_unary
    if distinct_slots:
        if len(nouns) < n_unary or len(verbs) < n_binary:
            raise ValueError("vocabulary subset too small for distinct slots")
        u = iter(rng.choice(len(nouns), n_unary, replace=False))
        b = iter(rng.choice(len(verbs), n_binary, replace=False)) if n_binary else iter(())
    else:
        u = iter(rng.integers(len(nouns), size=n_unary))
        b = iter(rng.integers(len(verbs), size=n_binary)) if n_binary else iter(())
    slots = tuple(int(verbs[next(b)]) if n in BINARY_SLOTS else int(nouns[next(u)]) for n in names)
    return AbstractSentence(fragment, template, slots)


# ---------------------------------------------------------------------------
# realization and parsing

# item kinds: ("w", word) literal; ("det", word) object determiner;
# ("a", slot, neg) article of the next noun; ("n", slot, neg) noun;
# ("v3", slot) third-person verb; ("v", slot) base verb
def _items(t: Template) -> tuple[tuple, ...]:
    f = t.form
    det, kind = f.split(".")
    items: list[tuple] = []

    def noun(slot, neg):
        items.append(("n", slot, bool(neg)))

    def pred(slot, neg):
        items.append(("a", slot, bool(neg)))
        noun(slot, neg)

    subj = {"every": "every", "no": "no", "some": "some", "some_not": "some"}[kind]
    items.append(("w", subj))
    if det == "S":
        noun("p", t.subj_neg)
        items.append(("w", "is"))
        if t.cop_neg:
            items.append(("w", "not"))
        pred("q", t.pred_neg)
    elif det == "W":
        noun("o", t.subj_neg)
        items += [("w", "who"), ("w", "is")]
        if t.rel_neg:
            items.append(("w", "not"))
        pred("p", False)
        items.append(("w", "is"))
        if t.cop_neg:
            items.append(("w", "not"))
        pred("q", t.pred_neg)
    elif det == "V":
        noun("p", t.subj_neg)
        if kind == "some_not":
            items += [("w", "does"), ("w", "not"), ("v", "r")]
        else:
            items.append(("v3", "r"))
        items.append(("det", t.obj_det))
        noun("q", t.obj_neg)
    elif det == "Z":
        noun("o", t.subj_neg)
        items.append(("w", "who"))
        if t.rel_neg:
            items += [("w", "does"), ("w", "not"), ("v", "r")]
        else:
            items.append(("v3", "r"))
        # the existential is spelled "any" under "does not"
        items.append(("det", "any" if t.rel_neg and t.obj_det == "some" else t.obj_det))
        noun("p", t.obj_neg)
        items.append(("w", "is"))
        if t.cop_neg:
            items.append(("w", "not"))
        pred("q", t.pred_neg)
    else:  # A
        noun("o", t.subj_neg)
        if kind == "some_not":
            items += [("w", "does"), ("w", "not"), ("v", "r")]
        else:
            items.append(("v3", "r"))
        items.append(("det", t.obj_det))
        noun("p", t.obj_neg)
        items.append(("w", "who"))
        if t.rel_neg:
            items += [("w", "does"), ("w", "not"), ("v", "s")]
        else:
            items.append(("v3", "s"))
        items.append(("w", "him"))
    return tuple(items)


_items_cached = lru_cache(maxsize=None)(_items)


def realize(s: AbstractSentence, vocab: Vocabulary) -> str:
    """Surface English for ``s``; no final punctuation, first word capitalized."""
    slots = dict(zip(s.template.slot_names, s.slots))
    words = []
    try:
        for item in _items_cached(s.template):
            tag = item[0]
            if tag in ("w", "det"):
                words.append(item[1])
            elif tag == "n":
                surface = vocab.nouns[slots[item[1]]].surface
                words.append("non-" + surface if item[2] else surface)
            elif tag == "a":
                words.append("a" if item[2] else vocab.nouns[slots[item[1]]].article)
            elif tag == "v3":
                words.append(vocab.verbs[slots[item[1]]].third)
            else:
                words.append(vocab.verbs[slots[item[1]]].base)
    except IndexError:
        raise ValueError(f"slot index out of range for {s.template.id}: {s.slots}") from None
    words[0] = words[0].capitalize()
    return " ".join(words)


_EXISTENTIAL_SPELLINGS = frozenset(("some", "any"))


@lru_cache(maxsize=None)
def _patterns(fragment: str) -> dict[int, tuple[tuple[Template, tuple], ...]]:
    by_len: dict[int, list] = {}
    for t in fragment_templates(fragment):
        items = _items(t)
        by_len.setdefault(len(items), []).append((t, items))
    return {k: tuple(v) for k, v in by_len.items()}


def normalize_text(text: str) -> list[str]:
    text = " ".join(text.split())
    if text.endswith("."):
        text = text[:-1].rstrip()
    return [w.lower() for w in text.split(" ")] if text else []


def parse(text: str, fragment: str, vocab: Vocabulary) -> AbstractSentence:
    """Inverse of :func:`realize` for sentences of ``fragment``.

    Raises :class:`NoTemplateMatch` for sentences outside the fragment,
    :class:`UnknownWord` when the sentence shape matches but a noun or verb
    is not in ``vocab``, and :class:`AmbiguousParse` if several templates
    fit. ``some`` and ``any`` are accepted interchangeably as the
    existential object determiner.
    """
    check_fragment(fragment)
    tokens = normalize_text(text)
    resolved = []
    unknown = None
    for template, items in _patterns(fragment).get(len(tokens), ()):
        slots: dict[str, int] = {}
        articles: dict[str, str] = {}
        ok = True
        missing = None
        for tok, item in zip(tokens, items):
            tag = item[0]
            if tag == "w":
                if tok != item[1]:
                    ok = False
                    break
            elif tag == "det":
                if tok != item[1] and not (tok in _EXISTENTIAL_SPELLINGS and item[1] in _EXISTENTIAL_SPELLINGS):
                    ok = False
                    break
            elif tag == "a":
                if tok not in ("a", "an"):
                    ok = False
                    break
                articles[item[1]] = tok
            elif tag == "n":
                # a positive slot takes the token whole, so a lexicon noun
                # spelled with "non-" yields a second reading, not a miss
                if item[2] and not tok.startswith("non-"):
                    ok = False
                    break
                word = tok[4:] if item[2] else tok
                idx = vocab.noun_index.get(word)
                if idx is None:
                    missing = missing or word
                else:
                    slots[item[1]] = idx
            else:
                table = vocab.third_index if tag == "v3" else vocab.verb_index
                idx = table.get(tok)
                if idx is None:
                    missing = missing or tok
                else:
                    slots[item[1]] = idx
        if not ok:
            continue
        if missing is not None:
            unknown = unknown or missing
            continue
        for slot, art in articles.items():
            neg = any(it[0] == "n" and it[1] == slot and it[2] for it in items)
            expected = "a" if neg else vocab.nouns[slots[slot]].article
            if art != expected:
                ok = False
        if ok:
            resolved.append(AbstractSentence(fragment, template,
                                             tuple(slots[n] for n in template.slot_names)))
    if len(resolved) > 1:
        raise AmbiguousParse(text, resolved)
    if resolved:
        return resolved[0]
    if unknown is not None:
        raise UnknownWord(unknown)
    raise NoTemplateMatch(f"no {fragment} template matches {text!r}")


def split_sentences(text: str) -> list[str]:
    """Split running text on full stops into sentences."""
    return [s.strip() for s in text.replace("\n", " ").split(".") if s.strip()]


def sample_vocab_subset(vocab: Vocabulary, n1: int, n2: int,
                        rng: np.random.Generator) -> tuple[list[int], list[int]]:
    """Draw ``n1`` distinct nouns and ``n2`` distinct verbs, each uniformly."""
    if n1 > len(vocab.nouns) or n2 > len(vocab.verbs):
        raise ValueError(f"vocabulary has {len(vocab.nouns)} nouns and {len(vocab.verbs)} verbs")
    nouns = sorted(int(i) for i in rng.choice(len(vocab.nouns), n1, replace=False))
    verbs = sorted(int(i) for i in rng.choice(len(vocab.verbs), n2, replace=False)) if n2 else []
    return nouns, verbs


def sample_instance(fragment: str, params: InstanceParams, rng: np.random.Generator,
                    vocab: Vocabulary | None = None, *, distinct_slots: bool = False,
                    law: str = "expanded", max_tries: int = 100) -> list[AbstractSentence]:
    """``params.m`` pairwise distinct sentences over a fresh vocabulary subset.

    Duplicate draws are redrawn; gives up after ``max_tries * m`` draws.
    """
    vocab = vocab or Vocabulary.default()
    subset = sample_vocab_subset(vocab, params.n1, params.n2, rng)
    seen: dict[AbstractSentence, None] = {}
    for _ in range(max_tries * params.m):
        s = sample_sentence(fragment, subset, rng, distinct_slots=distinct_slots, law=law)
        seen.setdefault(s, None)
        if len(seen) == params.m:
            return list(seen)
    raise ValueError(f"could not draw {params.m} distinct sentences from {params.n1} nouns and {params.n2} verbs")
