import random

import pytest
from hypothesis import given, strategies as st

from footprint.errors import TaxonomyError
from footprint.taxonomy import CategoryTaxonomy, classify, load_taxonomy


def test_load_simple():
    t = load_taxonomy(b"[arts]\n[sports]\nwine -> arts\n")
    assert t.categories == ("arts", "sports") and t.size == 2
    assert dict(t.lexicon) == {"wine": 0}


def test_unicode_arrow_and_comments():
    t = load_taxonomy("# c\n[arts]\n[sports]\n  Red   Wine → arts\nTennis -> Sports\n")
    assert dict(t.lexicon) == {"red wine": 0, "tennis": 1}


def test_duplicate_category():
    with pytest.raises(TaxonomyError, match="duplicate category"):
        load_taxonomy("[arts]\n[sports]\n[arts]\n")


def test_unknown_category_names_term():
    with pytest.raises(TaxonomyError, match="'wine'"):
        load_taxonomy("[arts]\n[sports]\nwine -> food\n")


def test_term_in_two_categories():
    with pytest.raises(TaxonomyError, match="already belongs"):
        load_taxonomy("[arts]\nwine\n[sports]\nwine\n")


def test_term_before_category():
    with pytest.raises(TaxonomyError):
        load_taxonomy("wine\n[arts]\n[sports]\n")


def test_needs_two_categories():
    with pytest.raises(TaxonomyError):
        load_taxonomy("[arts]\nwine\n")


def test_bundled_has_fourteen():
    t = CategoryTaxonomy.bundled()
    assert t.size == 14
    assert all(t.terms_by_category())


def test_classify_examples(small_taxonomy):
    t = small_taxonomy
    assert classify("red wine", t) == 0
    assert classify("zzzz", t) is None
    assert classify("Wine", t) == classify("wine", t) == 0
    assert classify("  TENNIS ", t) == 1
    assert classify("", t) is None


def test_plurality_and_tie_break(small_taxonomy):
    t = small_taxonomy
    assert classify("football tennis wine", t) == 1
    assert classify("tennis wine", t) == 0  # tie -> lowest index


def test_exact_match_wins_over_words():
    t = load_taxonomy("[arts]\nfootball music\n[sports]\nfootball\nmusic\n")
    assert classify("football music", t) == 0


@given(st.lists(st.sampled_from(["wine", "music", "football", "tennis", "cheese", "x"]), min_size=1, max_size=5),
       st.randoms(use_true_random=False))
def test_insertion_order_irrelevant(words, rnd):
    terms = [("wine", "arts"), ("music", "arts"), ("football", "sports"), ("tennis", "sports")]
    shuffled = terms[:]
    rnd.shuffle(shuffled)
    a = load_taxonomy("[arts]\n[sports]\n" + "".join(f"{w} -> {c}\n" for w, c in terms))
    b = load_taxonomy("[arts]\n[sports]\n" + "".join(f"{w} -> {c}\n" for w, c in shuffled))
    term = " ".join(words)
    result = classify(term, a)
    assert result == classify(term, b) == classify(term, a)
    assert result is None or 0 <= result < a.size
