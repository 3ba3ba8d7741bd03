from pathlib import Path

import pytest

from odqagen.stemming import stem, stem_fixed

VECTORS = Path(__file__).parent / "data" / "porter_vectors.txt"


def load_vectors():
    pairs = []
    for line in VECTORS.read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        word, expected = line.split("\t")
        pairs.append((word, expected))
    return pairs


def test_reference_fixture_size():
    assert len(load_vectors()) >= 100


@pytest.mark.parametrize("word,expected", load_vectors())
def test_reference_vectors(word, expected):
    assert stem(word) == expected


def test_no_applicable_rule():
    assert stem("sky") == "sky"


def test_plural_strip():
    assert stem("plays") == "play"


def test_sses_rule():
    assert stem("caresses") == "caress"


def test_pattern_vocabulary():
    # the words the pattern examples depend on
    assert stem("sings") == "sing"
    assert stem("lyrics") == "lyric"
    assert stem("doctor") == "doctor"
    assert stem("the") == "the"


def test_short_words_unchanged():
    assert stem("is") == "is"
    assert stem("a") == "a"
    assert stem("") == ""


def test_uppercase_folded():
    assert stem("Plays") == "play"


def test_fixed_point_is_idempotent():
    for word, _ in load_vectors():
        once = stem_fixed(word)
        assert stem_fixed(once) == once
