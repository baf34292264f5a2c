import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsat.grammar import (
    FRAGMENTS, FORMS, AbstractSentence, AmbiguousParse, InstanceParams, NoTemplateMatch, Noun,
    Template, UnknownWord, Verb, Vocabulary, fragment_templates, parse, realize, sample_instance,
    sample_sentence, sample_vocab_subset,
)


def _template(form, **kw):
    return Template(form, **kw)


def test_default_lexicon_sizes(vocab):
    assert len(vocab.nouns) == 156
    assert len(vocab.verbs) == 70


def test_lexicon_rejects_duplicates_and_bad_articles():
    with pytest.raises(ValueError):
        Vocabulary((Noun("artist", "an"), Noun("artist", "an")), ())
    with pytest.raises(ValueError):
        Vocabulary((Noun("artist", "the"),), ())


def test_lexicon_file_roundtrip(tmp_path):
    (tmp_path / "n.tsv").write_text("# nouns\nartist\tan\n\nbaker\ta\n", encoding="utf-8")
    (tmp_path / "v.tsv").write_text("admire\tadmires\n", encoding="utf-8")
    v = Vocabulary.from_files(tmp_path / "n.tsv", tmp_path / "v.tsv")
    assert [n.surface for n in v.nouns] == ["artist", "baker"]
    assert v.verbs[0].third == "admires"


def _count_by_enumeration(fragment):
    # independent count: product of the option counts of each form's fields
    count = 0
    for form, fields in FORMS.items():
        if FRAGMENTS.index(form[0]) <= FRAGMENTS.index(fragment):
            count += math.prod(len(values) for _, values in fields)
    return count


@pytest.mark.parametrize("fragment,expected", [("S", 16), ("W", 48), ("V", 88), ("Z", 216), ("A", 296)])
def test_inventory_sizes(fragment, expected):
    assert len(fragment_templates(fragment)) == expected
    assert _count_by_enumeration(fragment) == expected
    assert len(set(fragment_templates(fragment))) == expected


def test_inventory_chain():
    for a, b in zip(FRAGMENTS, FRAGMENTS[1:]):
        small, big = set(fragment_templates(a)), set(fragment_templates(b))
        assert small < big
        # the smaller inventory is a prefix of the larger one
        assert fragment_templates(b)[: len(small)] == fragment_templates(a)


def test_anaphora_forms_present():
    forms = {t.form for t in fragment_templates("A")} - {t.form for t in fragment_templates("Z")}
    assert forms == {"A.every", "A.some", "A.no", "A.some_not"}


def test_realize_examples(vocab):
    n, v = vocab.noun_index, vocab.verb_index
    s = AbstractSentence("S", _template("S.every", subj_neg=True, pred_neg=False),
                         (n["artist"], n["beekeeper"]))
    assert realize(s, vocab) == "Every non-artist is a beekeeper"
    z = AbstractSentence("Z", _template("Z.every", rel_neg=False, obj_det="some", obj_neg=False, pred_neg=False),
                         (n["carpenter"], n["writer"], n["electrician"], v["admire"]))
    assert realize(z, vocab) == "Every carpenter who admires some writer is an electrician"
    a = AbstractSentence("A", _template("A.some", obj_det="no", obj_neg=False, rel_neg=False),
                         (n["artist"], n["beekeeper"], v["hate"], v["admire"]))
    assert realize(a, vocab) == "Some artist hates no beekeeper who admires him"


def test_realize_negations(vocab):
    n, v = vocab.noun_index, vocab.verb_index
    s = AbstractSentence("S", _template("S.some", cop_neg=True, pred_neg=True), (n["artist"], n["engineer"]))
    assert realize(s, vocab) == "Some artist is not a non-engineer"
    w = AbstractSentence("W", _template("W.every", rel_neg=True), (n["artist"], n["engineer"], n["baker"]))
    assert realize(w, vocab) == "Every artist who is not an engineer is a baker"
    a = AbstractSentence("A", _template("A.some_not", obj_det="any", obj_neg=True, rel_neg=True),
                         (n["artist"], n["baker"], v["hate"], v["admire"]))
    assert realize(a, vocab) == "Some artist does not hate any non-baker who does not admire him"


def test_parse_examples(vocab):
    s = parse("Every non-artist is a beekeeper", "S", vocab)
    assert s.template.form == "S.every" and s.template.subj_neg and not s.template.pred_neg
    assert parse("  every non-artist   is a beekeeper. ", "S", vocab) == s
    with pytest.raises(NoTemplateMatch):
        parse("Every carrot implies apples", "S", vocab)
    with pytest.raises(UnknownWord):
        parse("Every zebra is a beekeeper", "S", vocab)
    # a sentence outside the smaller fragment
    with pytest.raises(NoTemplateMatch):
        parse("Every artist admires some beekeeper", "W", vocab)


def test_parse_checks_article(vocab):
    with pytest.raises(NoTemplateMatch):
        parse("Every artist is an beekeeper", "S", vocab)


def test_ambiguous_parse_is_reported():
    # a noun spelled with the prefix gives two readings of "non-artist"
    v = Vocabulary((Noun("artist", "an"), Noun("non-artist", "a"), Noun("baker", "a")), ())
    with pytest.raises(AmbiguousParse):
        parse("Every non-artist is a baker", "S", v)


@pytest.mark.parametrize("fragment", FRAGMENTS)
def test_roundtrip_corpus(fragment, vocab):
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        subset = sample_vocab_subset(vocab, 6, 4 if fragment in "VZA" else 0, rng)
        s = sample_sentence(fragment, subset, rng)
        text = realize(s, vocab)
        assert parse(text, fragment, vocab) == s
        assert parse(text.lower() + ".", fragment, vocab) == s


@pytest.mark.parametrize("fragment", FRAGMENTS)
def test_realization_injective(fragment, vocab):
    # every template over a fixed slot filling realizes differently
    n = [vocab.noun_index[w] for w in ("artist", "baker", "carpenter")]
    v = [vocab.verb_index[w] for w in ("admire", "hate")]
    seen = {}
    for t in fragment_templates(fragment):
        nouns, verbs = iter(n), iter(v)
        slots = tuple(next(verbs) if name in "rs" else next(nouns) for name in t.slot_names)
        text = realize(AbstractSentence(fragment, t, slots), vocab)
        assert text not in seen, (t.id, seen.get(text))
        seen[text] = t.id


def test_sampling_deterministic_and_contained(vocab):
    subset = ([3, 7, 11], [2, 5, 9])
    a = [sample_sentence("A", subset, np.random.default_rng(5)) for _ in range(3)]
    b = [sample_sentence("A", subset, np.random.default_rng(5)) for _ in range(3)]
    assert a == b
    rng = np.random.default_rng(9)
    for _ in range(500):
        s = sample_sentence("A", subset, rng)
        assert set(s.unary_slots) <= set(subset[0]) and set(s.binary_slots) <= set(subset[1])


def test_sampling_rejects_missing_verbs():
    for fragment in "VZA":
        with pytest.raises(ValueError):
            sample_sentence(fragment, ([1, 2], []), np.random.default_rng(0))
    sample_sentence("W", ([1, 2], []), np.random.default_rng(0))


def test_template_frequencies_uniform():
    # 1e5 draws for S: each of the 16 templates within 3 sigma of uniform,
    # and the chi-square statistic below its 0.999 quantile for 15 dof
    rng = np.random.default_rng(123)
    draws = 100_000
    counts = Counter(sample_sentence("S", ([0, 1, 2], []), rng).template for _ in range(draws))
    k = len(fragment_templates("S"))
    assert len(counts) == k
    p = 1 / k
    sigma = math.sqrt(draws * p * (1 - p))
    for c in counts.values():
        assert abs(c - draws * p) <= 3 * sigma
    chi2 = sum((c - draws * p) ** 2 / (draws * p) for c in counts.values())
    assert chi2 < 37.70  # chi-square 0.999 quantile, 15 dof


def test_base_law_weights_forms_equally():
    rng = np.random.default_rng(4)
    counts = Counter(sample_sentence("S", ([0, 1], []), rng, law="base").template.form for _ in range(9000))
    assert set(counts) == {"S.every", "S.no", "S.some"}
    assert all(abs(c - 3000) < 200 for c in counts.values())
    with pytest.raises(ValueError):
        sample_sentence("S", ([0, 1], []), rng, law="other")


def test_distinct_slots(vocab):
    rng = np.random.default_rng(2)
    for _ in range(300):
        s = sample_sentence("A", ([1, 2, 3], [4, 5]), rng, distinct_slots=True)
        assert len(set(s.unary_slots)) == len(s.unary_slots)
        assert len(set(s.binary_slots)) == len(s.binary_slots)


def test_instance_params():
    p = InstanceParams(6, 4, 3)
    assert p.alpha == 1.5 and p.beta == 2.0
    assert InstanceParams(6, 4).beta is None
    for bad in ((0, 3, 0), (3, 0, 0), (3, 3, -1)):
        with pytest.raises(ValueError):
            InstanceParams(*bad)


def test_sample_instance_distinct(vocab):
    rng = np.random.default_rng(8)
    for fragment in FRAGMENTS:
        sents = sample_instance(fragment, InstanceParams(12, 5, 3 if fragment in "VZA" else 0), rng, vocab)
        assert len(sents) == 12 and len(set(sents)) == 12
    with pytest.raises(ValueError):
        # only 2 * 2 * 2 S.every... sentences exist over one noun: 16 in all
        sample_instance("S", InstanceParams(17, 1), rng, vocab)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(FRAGMENTS))
def test_roundtrip_property(seed, fragment):
    vocab = Vocabulary.default()
    rng = np.random.default_rng(seed)
    subset = sample_vocab_subset(vocab, 4, 3, rng)
    s = sample_sentence(fragment, subset, rng, distinct_slots=bool(seed % 2))
    assert parse(realize(s, vocab), fragment, vocab) == s


def test_abstract_sentence_validation():
    t = fragment_templates("S")[0]
    with pytest.raises(ValueError):
        AbstractSentence("S", t, (1,))
    a = fragment_templates("A")[-1]
    with pytest.raises(ValueError):
        AbstractSentence("S", a, (1, 2, 3, 4))


def test_vocabulary_extension(vocab):
    v = vocab.extended([Noun("zebra", "a")], [Verb("poke", "pokes")])
    assert len(v.nouns) == 157 and v.noun_index["zebra"] == 156
    s = parse("Every zebra pokes some artist", "V", v)
    assert realize(s, v) == "Every zebra pokes some artist"
