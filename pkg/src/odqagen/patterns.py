"""Question patterns: entity-anonymized, preposition-unified, stemmed question shapes.

"Who plays the doctor in Sons of Anarchy?" and "Who plays Stacey's mum
in Gavin and Stacey?" share the pattern "who play the doctor [prep]
[entity]": every linked entity becomes the [entity] token, prepositions
(optionally) become [prep], and the remaining words are stemmed.
Pattern frequency over the train split drives the binned analyses.
"""

from __future__ import annotations

import re
import warnings
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .data import Question
from .decompose import AtomSet
from .stemming import stem, stem_fixed

ENTITY_TOKEN = "[entity]"
PREP_TOKEN = "[prep]"

PREPOSITIONS = frozenset(
    """in on at of by for with from to into onto over under about between
    during before after through against among within without along across
    behind beyond near since until upon toward towards off around above
    below beside besides amid despite throughout underneath inside outside
    via per""".split()
)

_TOKEN_RE = re.compile(r"\[entity\]|\[prep\]|[^\W_]+")

__all__ = [
    "ENTITY_TOKEN",
    "PREP_TOKEN",
    "PREPOSITIONS",
    "Pattern",
    "FrequencyBins",
    "PatternBin",
    "PatternBinning",
    "extract_pattern",
    "pattern_frequency_table",
    "bin_patterns",
    "PatternFrequency",
    "stem",
]


@dataclass(frozen=True)
class Pattern:
    """Rendered pattern string plus its [entity] placeholder count."""

    text: str
    placeholders: int


def _claim_entity_spans(text: str, surfaces: Iterable[str]) -> list[tuple[int, int]]:
    """Case-insensitive occurrences of the entity surfaces; longest span wins overlaps."""
    lowered = text.lower()
    claimed: list[tuple[int, int]] = []
    overlapped = False
    for surface in sorted({s.lower() for s in surfaces if s}, key=lambda s: (-len(s), s)):
        start = 0
        while True:
            i = lowered.find(surface, start)
            if i < 0:
                break
            j = i + len(surface)
            if any(s < j and e > i for s, e in claimed):
                overlapped = True
            else:
                claimed.append((i, j))
            start = i + 1
    if overlapped:
        warnings.warn(f"overlapping entity spans in {text!r}; longest span wins")
    return sorted(claimed)


def _render_token(token: str, unify_prepositions: bool) -> str:
    if token in (ENTITY_TOKEN, PREP_TOKEN):
        return token
    if unify_prepositions and token in PREPOSITIONS:
        return PREP_TOKEN
    stemmed = stem_fixed(token)
    # A junk token can stem *into* the preposition list ("ons" -> "on");
    # map those too so a rendered pattern re-extracts to itself.
    if unify_prepositions and stemmed in PREPOSITIONS:
        return PREP_TOKEN
    return stemmed


def extract_pattern(
    question: Question | str,
    atoms: AtomSet | None = None,
    unify_prepositions: bool = True,
) -> Pattern:
    """Derive the pattern of a question given its decomposed atoms.

    Entity surfaces are located in the text case-insensitively and every
    occurrence is replaced; placeholder tokens are exempt from both
    stemming and preposition unification.
    """
    text = question.text if isinstance(question, Question) else question
    surfaces = [m.surface for m in atoms.entities] if atoms is not None else []
    spans = _claim_entity_spans(text, surfaces)

    rendered: list[str] = []
    placeholders = 0
    cursor = 0
    for s, e in spans:
        for token in _TOKEN_RE.findall(text[cursor:s].lower()):
            rendered.append(_render_token(token, unify_prepositions))
        rendered.append(ENTITY_TOKEN)
        placeholders += 1
        cursor = e
    for token in _TOKEN_RE.findall(text[cursor:].lower()):
        if token == ENTITY_TOKEN:
            placeholders += 1
            rendered.append(token)
        else:
            rendered.append(_render_token(token, unify_prepositions))
    return Pattern(text=" ".join(rendered), placeholders=placeholders)


def pattern_frequency_table(
    pairs: Iterable[tuple[Question | str, AtomSet | None]],
    unify_prepositions: bool = True,
) -> Counter[str]:
    """Exact pattern counts over the train split; absent patterns count 0."""
    table: Counter[str] = Counter()
    for question, atoms in pairs:
        table[extract_pattern(question, atoms, unify_prepositions).text] += 1
    return table


@dataclass(frozen=True)
class FrequencyBins:
    """Half-open count bins [e_i, e_{i+1}) from ascending edges starting at 0."""

    edges: tuple[int, ...] = (0, 1, 5, 20, 100, 500)

    def __post_init__(self):
        if not self.edges or self.edges[0] != 0:
            raise ValueError("bin edges must start at 0")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("bin edges must be strictly ascending")

    @classmethod
    def parse(cls, spec: str) -> "FrequencyBins":
        return cls(tuple(int(x) for x in spec.split(",") if x.strip() != ""))

    def index_of(self, count: int) -> int:
        if count < 0:
            raise ValueError("counts are non-negative")
        return bisect_right(self.edges, count) - 1

    def label(self, i: int) -> str:
        lo = self.edges[i]
        if i + 1 == len(self.edges):
            return f"[{lo},inf)"
        hi = self.edges[i + 1]
        if hi == lo + 1:
            return str(lo)
        return f"[{lo},{hi})"

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.label(i) for i in range(len(self.edges)))

    def label_of(self, count: int) -> str:
        return self.label(self.index_of(count))


@dataclass(frozen=True)
class PatternBin:
    label: str
    question_ids: tuple[str, ...]
    fraction: float


@dataclass(frozen=True)
class PatternBinning:
    bins: tuple[PatternBin, ...]
    total: int


def bin_patterns(
    pairs: Sequence[tuple[Question, AtomSet | None]],
    table: Mapping[str, int],
    bins: FrequencyBins = FrequencyBins(),
    unify_prepositions: bool = True,
) -> PatternBinning:
    """Partition test questions by their pattern's train frequency.

    Every question falls in exactly one bin and the bin fractions sum to
    one (for a non-empty input).
    """
    groups: list[list[str]] = [[] for _ in bins.edges]
    for question, atoms in pairs:
        pattern = extract_pattern(question, atoms, unify_prepositions)
        count = table.get(pattern.text, 0)
        groups[bins.index_of(count)].append(question.id)
    total = sum(len(g) for g in groups)
    return PatternBinning(
        bins=tuple(
            PatternBin(
                label=bins.label(i),
                question_ids=tuple(group),
                fraction=(len(group) / total) if total else 0.0,
            )
            for i, group in enumerate(groups)
        ),
        total=total,
    )


def attach_pattern_frequencies(index, pairs, unify_prepositions: bool = True) -> None:
    """Fill a TrainIndex's pattern_freq table from its (question, atoms) pairs."""
    index.pattern_freq = dict(pattern_frequency_table(pairs, unify_prepositions))


class PatternFrequency(TransformerMixin, BaseEstimator):
    """Fit a pattern frequency table on train questions, then look up test counts.

    X is a sequence of (question, atom_set) pairs; transform returns the
    train-frequency of each question's pattern.
    """

    def __init__(self, unify_prepositions: bool = True):
        self.unify_prepositions = unify_prepositions

    def fit(self, X, y=None):
        self.table_ = pattern_frequency_table(X, self.unify_prepositions)
        return self

    def transform(self, X) -> list[int]:
        check_is_fitted(self, "table_")
        return [
            self.table_.get(extract_pattern(q, a, self.unify_prepositions).text, 0)
            for q, a in X
        ]

    def pattern_of(self, question: Question | str, atoms: AtomSet | None = None) -> Pattern:
        return extract_pattern(question, atoms, self.unify_prepositions)
