"""Categorize test questions by their relation to the training set.

A test question lands in one of three candidate categories:

- ``novel_entity``: it mentions an entity never seen in training;
- ``overlap``: some training question shares (or contains a sub-sequence
  of) one of its answers, is more similar than a threshold, and has the
  identical entity set;
- ``comp_gen``: every atom is covered by the training set as a whole but
  no single training question covers them all.

Candidates are paired with their closest training questions for human
verification, and annotator labels finalize the subsets.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import Question, iter_jsonl, write_jsonl
from .decompose import AtomSet, EntityMention
from .text import char_trigrams, jaccard, normalize_answer, normalize_atom, tokens_of

CATEGORIES = ("overlap", "comp_gen", "novel_entity", "uncategorized")

Atom = tuple[str, str]


def make_task_id(question_id: str, category: str) -> str:
    return f"{question_id}::{category}"


@dataclass
class TrainIndex:
    """Inverted indexes over the decomposed training split."""

    atom_sets: dict[str, AtomSet]
    order: dict[str, int]
    atom_universe: frozenset[Atom]
    postings: dict[Atom, frozenset[str]]
    entity_counts: dict[str, int]
    entity_surfaces: dict[str, tuple[str, str]]
    verb_counts: dict[str, int]
    questions: dict[str, Question]
    answer_index: dict[tuple[str, ...], set[str]]
    question_trigrams: dict[str, frozenset[str]]
    question_tokens: dict[str, frozenset[str]]
    entity_trigrams: dict[str, tuple[frozenset[str], ...]]
    pattern_freq: dict[str, int] = field(default_factory=dict)

    @property
    def entity_universe(self) -> frozenset[str]:
        return frozenset(self.entity_counts)

    def __len__(self) -> int:
        return len(self.atom_sets)


def build_train_index(
    atom_sets: Iterable[AtomSet],
    questions: Iterable[Question] | None = None,
) -> TrainIndex:
    """Index the decomposed train split; question texts/answers are optional."""
    sets: dict[str, AtomSet] = {}
    order: dict[str, int] = {}
    for atoms in atom_sets:
        if atoms.question_id not in sets:
            order[atoms.question_id] = len(order)
        sets[atoms.question_id] = atoms
    if not sets:
        raise ValueError("empty train split: nothing to index")

    postings: dict[Atom, set[str]] = {}
    entity_counts: Counter[str] = Counter()
    entity_surfaces: dict[str, tuple[str, str]] = {}
    verb_counts: Counter[str] = Counter()
    entity_trigrams: dict[str, tuple[frozenset[str], ...]] = {}
    for qid, atoms in sets.items():
        for atom in atoms.atoms():
            postings.setdefault(atom, set()).add(qid)
        entity_counts.update(atoms.entity_atoms)
        verb_counts.update(atoms.verbs)
        for mention in atoms.entities:
            entity_surfaces.setdefault(mention.norm, (mention.surface, mention.title))
        entity_trigrams[qid] = tuple(char_trigrams(e) for e in sorted(atoms.entity_atoms))

    question_map: dict[str, Question] = {}
    answer_index: dict[tuple[str, ...], set[str]] = {}
    question_trigrams: dict[str, frozenset[str]] = {}
    question_tokens: dict[str, frozenset[str]] = {}
    if questions is not None:
        for q in questions:
            if q.id not in sets:
                continue
            question_map[q.id] = q
            question_trigrams[q.id] = char_trigrams(normalize_atom(q.text))
            question_tokens[q.id] = frozenset(tokens_of(q.text))
            for answer in q.answers:
                tokens = normalize_answer(answer).tokens
                if tokens:
                    answer_index.setdefault(tokens, set()).add(q.id)

    return TrainIndex(
        atom_sets=sets,
        order=order,
        atom_universe=frozenset(postings),
        postings={a: frozenset(qids) for a, qids in postings.items()},
        entity_counts=dict(entity_counts),
        entity_surfaces=entity_surfaces,
        verb_counts=dict(verb_counts),
        questions=question_map,
        answer_index=answer_index,
        question_trigrams=question_trigrams,
        question_tokens=question_tokens,
        entity_trigrams=entity_trigrams,
    )


def _has_novel_entity(atoms: AtomSet, index: TrainIndex, any_atom: bool) -> bool:
    if any_atom:
        return any(atom not in index.atom_universe for atom in atoms.atoms())
    return any(e not in index.entity_counts for e in atoms.entity_atoms)


def _covered_but_not_by_one(atoms: AtomSet, index: TrainIndex) -> bool:
    atom_set = atoms.atoms()
    if not atom_set:
        return False
    posting_lists = []
    for atom in atom_set:
        postings = index.postings.get(atom)
        if postings is None:
            return False
        posting_lists.append(postings)
    posting_lists.sort(key=len)
    covering = set(posting_lists[0])
    for postings in posting_lists[1:]:
        covering &= postings
        if not covering:
            return True
    return not covering


def _overlap_candidates(question: Question, index: TrainIndex) -> set[str]:
    """Train questions whose answer equals, or is a token sub-sequence of, a test answer."""
    candidates: set[str] = set()
    for answer in question.answers:
        tokens = normalize_answer(answer).tokens
        for i in range(len(tokens)):
            for j in range(i + 1, len(tokens) + 1):
                candidates.update(index.answer_index.get(tokens[i:j], ()))
    return candidates


def _meets_overlap_criteria(
    atoms: AtomSet, question: Question, index: TrainIndex, tau: float
) -> list[str]:
    matches = []
    test_trigrams = char_trigrams(normalize_atom(question.text))
    test_entities = atoms.entity_atoms
    for qid in _overlap_candidates(question, index):
        train_atoms = index.atom_sets.get(qid)
        if train_atoms is None or train_atoms.entity_atoms != test_entities:
            continue
        if jaccard(test_trigrams, index.question_trigrams[qid]) >= tau:
            matches.append(qid)
    return sorted(matches, key=lambda qid: index.order[qid])


def classify(
    atoms: AtomSet,
    index: TrainIndex,
    question: Question | None = None,
    tau: float = 0.5,
    novel_any_atom: bool = False,
) -> str:
    """Candidate category for one decomposed test question.

    Without the test `question` (text and answers) the overlap criteria
    cannot be evaluated and that category is never produced.
    """
    if _has_novel_entity(atoms, index, novel_any_atom):
        return "novel_entity"
    if question is not None and _meets_overlap_criteria(atoms, question, index, tau):
        return "overlap"
    if _covered_but_not_by_one(atoms, index):
        return "comp_gen"
    return "uncategorized"


@dataclass(frozen=True)
class PairedQuestion:
    train_id: str
    score: float
    text: str | None = None


@dataclass(frozen=True)
class CategoryAssignment:
    question_id: str
    category: str
    paired: tuple[PairedQuestion, ...]
    evidence: dict
    question_text: str | None = None
    entities: tuple[EntityMention, ...] = ()


def _top_k(scores: dict[str, float], index: TrainIndex, k: int) -> list[tuple[str, float]]:
    ranked = sorted(scores.items(), key=lambda item: (-item[1], index.order[item[0]]))
    return ranked[: max(k, 0)]


def pair_for_verification(
    atoms: AtomSet,
    category: str,
    index: TrainIndex,
    k: int,
    question: Question | None = None,
) -> CategoryAssignment:
    """Attach the top-k training questions an annotator should compare against.

    Overlap pairs by character-level question similarity, novel_entity by
    character-level similarity between entity strings, comp_gen by word
    overlap.  Ties break in train-order.
    """
    if category == "uncategorized":
        return CategoryAssignment(
            question_id=atoms.question_id,
            category=category,
            paired=(),
            evidence={},
            question_text=question.text if question else None,
            entities=atoms.entities,
        )

    scores: dict[str, float] = {}
    evidence: dict = {}
    if category == "novel_entity":
        novel = sorted(e for e in atoms.entity_atoms if e not in index.entity_counts)
        evidence["novel_entities"] = novel
        test_trigrams = [char_trigrams(e) for e in sorted(atoms.entity_atoms)]
        if test_trigrams:
            for qid, train_trigrams in index.entity_trigrams.items():
                if not train_trigrams:
                    continue
                scores[qid] = max(
                    jaccard(a, b) for a in test_trigrams for b in train_trigrams
                )
    elif category == "overlap" and question is not None:
        evidence["answer_matches"] = _meets_overlap_criteria(atoms, question, index, tau=0.0)
        test_trigrams = char_trigrams(normalize_atom(question.text))
        for qid, train_trigrams in index.question_trigrams.items():
            scores[qid] = jaccard(test_trigrams, train_trigrams)
    elif category == "comp_gen" and question is not None:
        test_tokens = frozenset(tokens_of(question.text))
        for qid, train_tokens in index.question_tokens.items():
            scores[qid] = jaccard(test_tokens, train_tokens)

    paired = tuple(
        PairedQuestion(
            train_id=qid,
            score=round(score, 6),
            text=index.questions[qid].text if qid in index.questions else None,
        )
        for qid, score in _top_k(scores, index, k)
    )
    return CategoryAssignment(
        question_id=atoms.question_id,
        category=category,
        paired=paired,
        evidence=evidence,
        question_text=question.text if question else None,
        entities=atoms.entities,
    )


class GeneralizationCategorizer(BaseEstimator):
    """Fit on the decomposed train split, predict candidate categories for test questions.

    Parameters
    ----------
    tau:
        Similarity threshold for the overlap criteria (Jaccard over
        character trigrams of the normalized question text).
    pairs_k:
        How many training questions to pair with each candidate.
    novel_any_atom:
        When true, any unseen atom (not just an unseen entity) makes a
        question a novel_entity candidate.
    """

    def __init__(self, tau: float = 0.5, pairs_k: int = 5, novel_any_atom: bool = False):
        self.tau = tau
        self.pairs_k = pairs_k
        self.novel_any_atom = novel_any_atom

    @staticmethod
    def _split(X) -> list[tuple[Question | None, AtomSet]]:
        pairs = []
        for item in X:
            if isinstance(item, AtomSet):
                pairs.append((None, item))
            else:
                question, atoms = item
                pairs.append((question, atoms))
        return pairs

    def fit(self, X, y=None):
        """X: sequence of AtomSet, or of (Question, AtomSet) pairs."""
        pairs = self._split(X)
        questions = [q for q, _ in pairs if q is not None]
        self.index_ = build_train_index(
            (atoms for _, atoms in pairs), questions or None
        )
        return self

    def predict(self, X) -> list[str]:
        check_is_fitted(self, "index_")
        return [
            classify(atoms, self.index_, question, self.tau, self.novel_any_atom)
            for question, atoms in self._split(X)
        ]

    def assign(self, X) -> list[CategoryAssignment]:
        """Classify and pair each test question for human verification."""
        check_is_fitted(self, "index_")
        out = []
        for question, atoms in self._split(X):
            category = classify(atoms, self.index_, question, self.tau, self.novel_any_atom)
            out.append(pair_for_verification(atoms, category, self.index_, self.pairs_k, question))
        return out


def assignment_to_row(assignment: CategoryAssignment) -> dict:
    return {
        "id": assignment.question_id,
        "question": assignment.question_text,
        "category": assignment.category,
        "paired": [
            {"id": p.train_id, "question": p.text, "score": p.score}
            for p in assignment.paired
        ],
        "entities": [{"surface": m.surface, "title": m.title} for m in assignment.entities],
        "evidence": assignment.evidence,
    }


def write_assignments(path: str | Path, assignments: Iterable[CategoryAssignment]) -> None:
    write_jsonl(path, (assignment_to_row(a) for a in assignments))


def load_assignments(path: str | Path) -> list[CategoryAssignment]:
    out = []
    seen = set()
    for lineno, obj in iter_jsonl(path):
        qid = str(obj["id"])
        if qid in seen:
            raise ValueError(f"{path}:{lineno}: duplicate assignment for question '{qid}'")
        seen.add(qid)
        out.append(
            CategoryAssignment(
                question_id=qid,
                category=obj["category"],
                paired=tuple(
                    PairedQuestion(train_id=str(p["id"]), score=float(p["score"]), text=p.get("question"))
                    for p in obj.get("paired", ())
                ),
                evidence=obj.get("evidence", {}),
                question_text=obj.get("question"),
                entities=tuple(
                    EntityMention(surface=e["surface"], title=e.get("title", e["surface"]))
                    for e in obj.get("entities", ())
                ),
            )
        )
    return out


@dataclass
class SubsetPartition:
    """Final disjoint subsets plus the coverage statistic."""

    overlap: list[str]
    comp_gen: list[str]
    novel_entity: list[str]
    uncategorized: list[str]
    coverage: float
    disputed: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "overlap": self.overlap,
            "comp_gen": self.comp_gen,
            "novel_entity": self.novel_entity,
            "uncategorized": self.uncategorized,
            "coverage": self.coverage,
        }


def _effective_labels(labels) -> dict[str, dict[str, bool]]:
    """task_id -> annotator -> last submitted label (by timestamp, then log order)."""
    latest: dict[tuple[str, str], tuple[float, int, bool]] = {}
    for position, record in enumerate(labels):
        key = (record.task_id, record.annotator)
        stamp = (record.ts, position)
        if key not in latest or stamp >= latest[key][:2]:
            latest[key] = (record.ts, position, record.label)
    by_task: dict[str, dict[str, bool]] = {}
    for (task_id, annotator), (_, _, label) in latest.items():
        by_task.setdefault(task_id, {})[annotator] = label
    return by_task


def _decide(votes: Mapping[str, bool], adjudication: str) -> bool | None | str:
    values = list(votes.values())
    if all(values):
        return True
    if not any(values):
        return False
    if adjudication == "unanimous":
        return False
    if adjudication == "majority":
        yes = sum(values)
        if yes * 2 == len(values):
            return "disputed"
        return yes * 2 > len(values)
    return "disputed"


def finalize_subsets(
    assignments: Sequence[CategoryAssignment],
    labels,
    adjudication: str = "unanimous",
    auto_accept: bool = False,
) -> SubsetPartition:
    """Turn candidate assignments plus annotator labels into the final subsets.

    A question is admitted to its candidate category only when its labels
    decide True under the adjudication rule; everything else (rejected,
    unlabeled without auto_accept, or disputed under adjudication="none")
    falls into uncategorized.
    """
    if adjudication not in ("unanimous", "majority", "none"):
        raise ValueError(f"unknown adjudication rule '{adjudication}'")
    seen: set[str] = set()
    for assignment in assignments:
        if assignment.question_id in seen:
            raise ValueError(f"duplicate assignment for question '{assignment.question_id}'")
        seen.add(assignment.question_id)

    by_task = _effective_labels(labels)
    partition = SubsetPartition([], [], [], [], coverage=0.0)
    for assignment in assignments:
        qid = assignment.question_id
        if assignment.category == "uncategorized":
            partition.uncategorized.append(qid)
            continue
        votes = by_task.get(make_task_id(qid, assignment.category), {})
        if not votes:
            decision = True if auto_accept else None
        else:
            decision = _decide(votes, adjudication)
        if decision is True:
            getattr(partition, assignment.category).append(qid)
        else:
            if decision == "disputed":
                partition.disputed.append(qid)
            partition.uncategorized.append(qid)

    covered = len(partition.overlap) + len(partition.comp_gen) + len(partition.novel_entity)
    total = len(assignments)
    partition.coverage = covered / total if total else 0.0
    return partition


def write_subsets(path: str | Path, partition: SubsetPartition) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(partition.to_dict(), f, indent=2)
        f.write("\n")


def load_subsets(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as f:
        subsets = json.load(f)
    for key in ("overlap", "comp_gen", "novel_entity"):
        if key not in subsets:
            raise ValueError(f"{path}: missing subset '{key}'")
    return subsets
