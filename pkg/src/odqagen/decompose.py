"""Break a question into its atoms: question word, verbs, linked entities, other args.

The atoms of a question are derived from externally supplied SRL frames
and entity links.  Verbs come straight from the SRL predicates, entity
atoms from the link surfaces, and other_args are the SRL argument spans
left over once entity-overlapping parts are removed.  Atom strings are
normalized like answers but keep their articles, so an entity such as
"the beatles" survives intact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .data import AnnotationBundle, EntityLink, Question, iter_jsonl, write_jsonl
from .text import normalize_atom, tokens_of

WH_WORDS = frozenset({"who", "what", "when", "where", "which", "why", "how", "whose", "whom"})

# Determiners trimmed from the front of an other_arg span.
_DETERMINERS = frozenset({"a", "an", "the", "this", "that", "these", "those"})

# Function words ignored when deciding whether a split argument fragment
# still carries enough content to keep as an atom.
_STOPWORDS = _DETERMINERS | frozenset(
    """in on at of by for with from to into onto over under and or but nor
    is are was were be been being am do does did has have had it its their
    his her my your our than then as if s t""".split()
)


@dataclass(frozen=True)
class EntityMention:
    """One linked entity occurrence: raw surface string plus Wikipedia title."""

    surface: str
    title: str
    start: int | None = None
    end: int | None = None

    @property
    def norm(self) -> str:
        return normalize_atom(self.surface)


@dataclass(frozen=True)
class AtomSet:
    """The decomposed atoms of one question."""

    question_id: str
    question_word: str | None
    verbs: frozenset[str]
    entities: tuple[EntityMention, ...]
    other_args: frozenset[str]

    @property
    def entity_atoms(self) -> frozenset[str]:
        return frozenset(m.norm for m in self.entities)

    def atoms(self) -> frozenset[tuple[str, str]]:
        """All atoms as typed (kind, value) pairs."""
        out = set()
        if self.question_word:
            out.add(("qw", self.question_word))
        out.update(("verb", v) for v in self.verbs)
        out.update(("entity", e) for e in self.entity_atoms)
        out.update(("other", o) for o in self.other_args)
        return frozenset(out)

    @classmethod
    def build(
        cls,
        question_id: str,
        question_word: str | None = None,
        verbs: Iterable[str] = (),
        entities: Iterable[EntityMention | tuple[str, str] | str] = (),
        other_args: Iterable[str] = (),
    ) -> "AtomSet":
        mentions = []
        for e in entities:
            if isinstance(e, EntityMention):
                mentions.append(e)
            elif isinstance(e, tuple):
                mentions.append(EntityMention(surface=e[0], title=e[1]))
            else:
                mentions.append(EntityMention(surface=e, title=e))
        return cls(
            question_id=question_id,
            question_word=question_word,
            verbs=frozenset(verbs),
            entities=tuple(mentions),
            other_args=frozenset(other_args),
        )


def extract_question_word(text: str) -> str | None:
    """Leftmost WH-word token, if any ("how many" collapses to "how")."""
    for token in tokens_of(text):
        if token in WH_WORDS:
            return token
    return None


def _subtract_spans(start: int, end: int, covers: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Portions of [start, end) not covered by any interval in covers."""
    segments = [(start, end)]
    for cs, ce in covers:
        next_segments = []
        for s, e in segments:
            if ce <= s or cs >= e:
                next_segments.append((s, e))
                continue
            if s < cs:
                next_segments.append((s, cs))
            if ce < e:
                next_segments.append((ce, e))
        segments = next_segments
    return [(s, e) for s, e in segments if e > s]


def _trim_determiners(tokens: list[str]) -> list[str]:
    i = 0
    while i < len(tokens) and tokens[i] in _DETERMINERS:
        i += 1
    return tokens[i:]


def _strip_edge_stopwords(tokens: list[str]) -> list[str]:
    lo, hi = 0, len(tokens)
    while lo < hi and tokens[lo] in _STOPWORDS:
        lo += 1
    while hi > lo and tokens[hi - 1] in _STOPWORDS:
        hi -= 1
    return tokens[lo:hi]


def filter_other_args(
    frames,
    entity_spans: Sequence[tuple[int, int]],
    text: str,
) -> frozenset[str]:
    """SRL argument spans that survive entity filtering.

    Arguments with no entity overlap are kept whole (minus leading
    determiners).  Arguments partially covered by an entity span are
    split at the entity boundaries and a fragment is kept only when at
    least two non-stopword tokens survive.
    """
    kept: set[str] = set()
    for frame in frames:
        for arg in frame.args:
            overlaps = any(cs < arg.end and ce > arg.start for cs, ce in entity_spans)
            if not overlaps:
                tokens = _trim_determiners(normalize_atom(text[arg.start : arg.end]).split())
                if tokens:
                    kept.add(" ".join(tokens))
                continue
            for s, e in _subtract_spans(arg.start, arg.end, entity_spans):
                tokens = _strip_edge_stopwords(normalize_atom(text[s:e]).split())
                if sum(1 for t in tokens if t not in _STOPWORDS) >= 2:
                    kept.add(" ".join(tokens))
    return frozenset(kept)


def derive_atoms(question: Question, bundle: AnnotationBundle) -> AtomSet:
    """Decompose one question given its SRL frames and entity links."""
    bundle.check_spans(question.text)
    entity_spans = [(link.start, link.end) for link in bundle.entity_links]
    mentions = tuple(
        EntityMention(
            surface=question.text[link.start : link.end],
            title=link.title,
            start=link.start,
            end=link.end,
        )
        for link in sorted(bundle.entity_links, key=lambda l: (l.start, l.end))
    )
    verbs = frozenset(normalize_atom(f.verb) for f in bundle.frames if normalize_atom(f.verb))
    return AtomSet(
        question_id=question.id,
        question_word=extract_question_word(question.text),
        verbs=verbs,
        entities=mentions,
        other_args=filter_other_args(bundle.frames, entity_spans, question.text),
    )


class QuestionDecomposer(TransformerMixin, BaseEstimator):
    """Stateless transformer from (question, annotation bundle) pairs to atom sets."""

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: Iterable[tuple[Question, AnnotationBundle]]) -> list[AtomSet]:
        return [derive_atoms(question, bundle) for question, bundle in X]


def atom_set_to_row(atoms: AtomSet) -> dict:
    return {
        "id": atoms.question_id,
        "qw": atoms.question_word,
        "verbs": sorted(atoms.verbs),
        "entities": [
            {"surface": m.surface, "title": m.title}
            for m in sorted(atoms.entities, key=lambda m: (m.start if m.start is not None else 0, m.surface))
        ],
        "other_args": sorted(atoms.other_args),
    }


def write_atoms(path: str | Path, atom_sets: Iterable[AtomSet]) -> None:
    write_jsonl(path, (atom_set_to_row(a) for a in atom_sets))


def load_atoms(path: str | Path) -> list[AtomSet]:
    """Read atom sets back from the decomposer's JSONL output."""
    out = []
    for lineno, obj in iter_jsonl(path):
        out.append(
            AtomSet(
                question_id=str(obj["id"]),
                question_word=obj.get("qw"),
                verbs=frozenset(obj.get("verbs", ())),
                entities=tuple(
                    EntityMention(surface=e["surface"], title=e.get("title", e["surface"]))
                    for e in obj.get("entities", ())
                ),
                other_args=frozenset(obj.get("other_args", ())),
            )
        )
    return out
