"""Text normalization shared by answer matching, atom handling, and similarity scoring.

Answer normalization follows the de-facto open-domain QA convention:
lowercase, strip punctuation characters, drop the articles a/an/the as
whole tokens, and collapse whitespace.  Atom normalization is the same
minus the article stripping, so entity names like "the beatles" keep
their article.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class NormalizedText:
    """A normalized token sequence. Renormalizing its rendering is a no-op."""

    tokens: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __bool__(self) -> bool:
        return bool(self.tokens)


def normalize_answer(text: str) -> NormalizedText:
    """Normalize an answer string for exact-match comparison.

    Lowercase, remove punctuation characters (so "3.2" becomes "32"),
    drop whole-token articles, collapse whitespace. Empty input yields
    an empty token list.
    """
    lowered = text.lower()
    no_punct = lowered.translate(_PUNCT_TABLE)
    no_articles = _ARTICLE_RE.sub(" ", no_punct)
    return NormalizedText(tokens=tuple(no_articles.split()))


def normalize_atom(text: str) -> str:
    """Normalize an atom surface string: like answers but articles are kept."""
    lowered = text.lower()
    no_punct = lowered.translate(_PUNCT_TABLE)
    return " ".join(no_punct.split())


def tokens_of(text: str) -> list[str]:
    """Lowercased word tokens (alphanumeric runs) of a raw string."""
    return _WORD_RE.findall(text.lower())


def char_trigrams(text: str) -> frozenset[str]:
    """Character trigram set; strings shorter than 3 chars yield themselves."""
    if len(text) < 3:
        return frozenset({text} if text else ())
    return frozenset(text[i : i + 3] for i in range(len(text) - 2))


def jaccard(a: frozenset | set, b: frozenset | set) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def trigram_similarity(a: str, b: str) -> float:
    """Character-level similarity: Jaccard over trigram sets of normalized text."""
    return jaccard(char_trigrams(normalize_atom(a)), char_trigrams(normalize_atom(b)))


def token_similarity(a: str, b: str) -> float:
    """Word-level similarity: Jaccard over token sets."""
    return jaccard(frozenset(tokens_of(a)), frozenset(tokens_of(b)))


def contains_token_span(haystack: tuple[str, ...], needle: tuple[str, ...]) -> bool:
    """True if needle occurs in haystack as a contiguous token run. Empty needles never match."""
    if not needle:
        return False
    n = len(needle)
    if n > len(haystack):
        return False
    first = needle[0]
    for i in range(len(haystack) - n + 1):
        if haystack[i] == first and haystack[i : i + n] == needle:
            return True
    return False
