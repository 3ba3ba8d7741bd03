from hypothesis import given
from hypothesis import strategies as st

from odqagen.text import (
    NormalizedText,
    char_trigrams,
    contains_token_span,
    jaccard,
    normalize_answer,
    normalize_atom,
    token_similarity,
    trigram_similarity,
)


def test_normalize_strips_article_and_punctuation():
    assert normalize_answer("The Beatles!").tokens == ("beatles",)


def test_normalize_already_normalized():
    assert normalize_answer("x").tokens == ("x",)


def test_normalize_keeps_digits_joined():
    # punctuation characters are removed, not blanked
    assert normalize_answer("3.2 million").tokens == ("32", "million")


def test_normalize_empty_input():
    assert normalize_answer("").tokens == ()
    assert normalize_answer("   ").tokens == ()
    assert normalize_answer("the a an").tokens == ()


def test_normalize_order_preserving():
    assert normalize_answer("war of roses").tokens == ("war", "of", "roses")
    assert normalize_answer("roses of war").tokens == ("roses", "of", "war")


@given(st.text(max_size=80))
def test_normalize_idempotent(text):
    once = normalize_answer(text)
    again = normalize_answer(once.text)
    assert once == again


@given(st.text(max_size=80))
def test_normalize_atom_idempotent(text):
    once = normalize_atom(text)
    assert normalize_atom(once) == once


def test_atom_normalization_keeps_articles():
    assert normalize_atom("The Glory of Love!") == "the glory of love"


def test_rendering_round_trip():
    nt = normalize_answer("Who framed Roger Rabbit?")
    assert isinstance(nt, NormalizedText)
    assert nt.text == "who framed roger rabbit"


def test_trigrams_short_strings():
    assert char_trigrams("") == frozenset()
    assert char_trigrams("ab") == frozenset({"ab"})
    assert char_trigrams("abcd") == frozenset({"abc", "bcd"})


def test_jaccard_edges():
    assert jaccard(frozenset(), frozenset()) == 1.0
    assert jaccard(frozenset({"a"}), frozenset()) == 0.0


def test_similarity_identical_is_one():
    assert trigram_similarity("Who won?", "who won") == 1.0
    assert token_similarity("who won the cup", "the cup who won") == 1.0


def test_contains_token_span():
    hay = ("there", "were", "32", "million", "farmers")
    assert contains_token_span(hay, ("32", "million"))
    assert not contains_token_span(hay, ("22", "million"))
    assert not contains_token_span(hay, ())
    assert contains_token_span(hay, hay)
