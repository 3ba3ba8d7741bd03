"""Modified-input generation for reader-model ablations.

Three transformations over retrieved passages (and, for entity swaps,
the question itself):

- entity swap: replace the single novel entity of a question, and every
  occurrence of it in the passages, with a training-set entity absent
  from both;
- answer masking: delete enough predicted-answer mentions that the
  prediction and the gold answer are mentioned equally often;
- passage randomization: replace a fraction of the retrieved passages
  with random pool passages, optionally pinning one gold passage.

All randomness is derived from (seed, question_id), so identical seeds
give byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .categorize import TrainIndex
from .data import Passage, Question, RetrievalSet, iter_jsonl
from .decompose import AtomSet, EntityMention
from .evaluate import first_hit_rank
from .text import contains_token_span, normalize_answer

MAX_RETRIES = 1000


@dataclass(frozen=True)
class Ineligible:
    question_id: str
    reason: str


@dataclass(frozen=True)
class SwapInstance:
    question_id: str
    original_entity: EntityMention
    replacement_surface: str
    replacement_title: str
    question_text: str
    passages: tuple[Passage, ...]


def rng_for(seed: int, question_id: str) -> random.Random:
    """Independent generator per question, stable across runs and platforms."""
    digest = hashlib.sha256(f"{seed}:{question_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def count_occurrences(text: str, phrase: str) -> int:
    """Non-overlapping, case-insensitive occurrences of phrase in text."""
    if not phrase:
        return 0
    lowered, needle = text.lower(), phrase.lower()
    count = 0
    i = lowered.find(needle)
    while i >= 0:
        count += 1
        i = lowered.find(needle, i + len(needle))
    return count


def replace_all(text: str, phrase: str, replacement: str) -> str:
    """Case-insensitive replacement of every occurrence."""
    return re.sub(re.escape(phrase), replacement.replace("\\", "\\\\"), text, flags=re.IGNORECASE)


def entity_swap(
    question: Question,
    atoms: AtomSet,
    retrieval: RetrievalSet,
    index: TrainIndex,
    rng_seed: int = 0,
) -> SwapInstance | Ineligible:
    """Swap the question's only entity for a seen one absent from question and passages."""
    distinct = atoms.entity_atoms
    if len(distinct) == 0:
        return Ineligible(question.id, "no-entity")
    if len(distinct) > 1:
        return Ineligible(question.id, "multi-entity")
    mention = atoms.entities[0]
    original = mention.surface
    original_lower = original.lower()

    haystacks = [question.text.lower()]
    for passage in retrieval.passages:
        haystacks.append(passage.title.lower())
        haystacks.append(passage.text.lower())

    candidates = sorted(index.entity_surfaces)
    if not candidates:
        return Ineligible(question.id, "no-candidate")
    rng = rng_for(rng_seed, question.id)
    replacement: tuple[str, str] | None = None
    for _ in range(MAX_RETRIES):
        surface, title = index.entity_surfaces[rng.choice(candidates)]
        lowered = surface.lower()
        if not lowered or lowered == original_lower or original_lower in lowered:
            continue
        if any(lowered in haystack for haystack in haystacks):
            continue
        replacement = (surface, title)
        break
    if replacement is None:
        return Ineligible(question.id, "no-candidate")

    surface, title = replacement
    return SwapInstance(
        question_id=question.id,
        original_entity=mention,
        replacement_surface=surface,
        replacement_title=title,
        question_text=replace_all(question.text, original, surface),
        passages=tuple(
            Passage(
                title=replace_all(p.title, original, surface),
                text=replace_all(p.text, original, surface),
                rank=p.rank,
                score=p.score,
            )
            for p in retrieval.passages
        ),
    )


def verify_swap(
    instance: SwapInstance,
    question: Question,
    atoms: AtomSet,
    retrieval: RetrievalSet,
) -> list[str]:
    """Check every swap constraint; returns the (ideally empty) list of violations."""
    violations = []
    if len(atoms.entity_atoms) != 1:
        violations.append("source question does not have exactly one entity")
    original = instance.original_entity.surface
    replacement = instance.replacement_surface
    if count_occurrences(instance.question_text, original):
        violations.append("original entity still present in rewritten question")
    for passage in instance.passages:
        if count_occurrences(passage.text, original) or count_occurrences(passage.title, original):
            violations.append(f"original entity still present in rewritten passage rank {passage.rank}")
    if count_occurrences(question.text, replacement):
        violations.append("replacement entity occurs in the original question")
    for passage in retrieval.passages:
        if count_occurrences(passage.text, replacement) or count_occurrences(passage.title, replacement):
            violations.append(f"replacement entity occurs in original passage rank {passage.rank}")
    if not count_occurrences(instance.question_text, replacement):
        violations.append("replacement entity missing from rewritten question")
    return violations


def _phrase_spans(text: str, phrase: str) -> list[tuple[int, int]]:
    spans = []
    lowered, needle = text.lower(), phrase.lower()
    i = lowered.find(needle)
    while i >= 0:
        spans.append((i, i + len(needle)))
        i = lowered.find(needle, i + len(needle))
    return spans


def count_gold_mentions(text: str, answers: Iterable[str]) -> int:
    """Non-overlapping mentions of any alias, longest alias first."""
    taken: list[tuple[int, int]] = []
    for alias in sorted({a for a in answers if a}, key=lambda a: (-len(a), a)):
        for s, e in _phrase_spans(text, alias):
            if not any(ts < e and te > s for ts, te in taken):
                taken.append((s, e))
    return len(taken)


def answer_mask(
    retrieval: RetrievalSet,
    predicted: str,
    gold_answers: Sequence[str],
    mask_token: str = "",
) -> tuple[Passage, ...] | Ineligible:
    """Mask predicted-answer mentions until they equal the gold mention count.

    Eligible only when the gold answers are mentioned strictly less often
    than the prediction.  Mentions are removed from the lowest-ranked
    passages first (right-to-left within a passage); the default mask is
    plain deletion with whitespace repair.
    """
    if not predicted:
        return Ineligible(retrieval.question_id, "empty-prediction")
    if mask_token and predicted.lower() in mask_token.lower():
        raise ValueError("mask_token contains the predicted answer")

    pred_count = sum(count_occurrences(p.text, predicted) for p in retrieval.passages)
    gold_count = sum(count_gold_mentions(p.text, gold_answers) for p in retrieval.passages)
    if gold_count >= pred_count:
        return Ineligible(retrieval.question_id, "gold-mentions-not-fewer")

    to_mask = pred_count - gold_count
    rewritten = list(retrieval.passages)
    for i in range(len(rewritten) - 1, -1, -1):
        if to_mask == 0:
            break
        passage = rewritten[i]
        spans = _phrase_spans(passage.text, predicted)
        if not spans:
            continue
        take = spans[-min(to_mask, len(spans)):]
        to_mask -= len(take)
        text = passage.text
        for s, e in reversed(take):
            text = text[:s] + mask_token + text[e:]
        if not mask_token:
            text = " ".join(text.split())
        rewritten[i] = Passage(title=passage.title, text=text, rank=passage.rank, score=passage.score)

    new_pred = sum(count_occurrences(p.text, predicted) for p in rewritten)
    new_gold = sum(count_gold_mentions(p.text, gold_answers) for p in rewritten)
    if new_pred != new_gold:
        raise RuntimeError(
            f"masking left {new_pred} predicted vs {new_gold} gold mentions "
            f"for '{retrieval.question_id}' (overlapping phrases?)"
        )
    return tuple(rewritten)


def load_passage_pool(path: str | Path) -> list[tuple[str, str]]:
    """Read a (title, text) pool from a passages JSONL corpus file."""
    pool = []
    for _, obj in iter_jsonl(path):
        pool.append((obj.get("title", ""), obj["text"]))
    if not pool:
        raise ValueError(f"empty passage pool: {path}")
    return pool


def randomize_passages(
    retrieval: RetrievalSet,
    fraction: float,
    pool: Sequence[tuple[str, str]],
    keep_gold: bool = False,
    rng_seed: int = 0,
    gold_answers: Sequence[str] = (),
) -> RetrievalSet | Ineligible:
    """Replace round(fraction * n) passages with random pool passages.

    With keep_gold, at least one retained original passage contains the
    gold answer (the question is Ineligible if none does); at fraction
    1.0 that means n-1 replacements. Ranks are reassigned 1..n.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be within [0, 1], got {fraction}")
    n = len(retrieval.passages)
    replace_count = int(fraction * n + 0.5)
    rng = rng_for(rng_seed, retrieval.question_id)

    keep_index: int | None = None
    if keep_gold:
        gold_tokens = [t for t in (normalize_answer(g).tokens for g in gold_answers) if t]
        gold_positions = [
            i
            for i, p in enumerate(retrieval.passages)
            if any(contains_token_span(normalize_answer(p.text).tokens, g) for g in gold_tokens)
        ]
        if not gold_positions:
            return Ineligible(retrieval.question_id, "no-gold-passage")
        keep_index = rng.choice(gold_positions)
        if replace_count == n:
            replace_count = n - 1

    replaceable = [i for i in range(n) if i != keep_index]
    replaced = set(rng.sample(replaceable, min(replace_count, len(replaceable))))

    originals = {(p.title, p.text) for p in retrieval.passages}
    pool_disjoint = [entry for entry in pool if entry not in originals]
    if len(pool_disjoint) < len(replaced):
        raise ValueError(
            f"pool has only {len(pool_disjoint)} usable passages, need {len(replaced)}"
        )
    samples = rng.sample(pool_disjoint, len(replaced))

    out = []
    sample_iter = iter(samples)
    for i, passage in enumerate(retrieval.passages):
        if i in replaced:
            title, text = next(sample_iter)
            out.append(Passage(title=title, text=text, rank=i + 1, score=None))
        else:
            out.append(Passage(title=passage.title, text=passage.text, rank=i + 1, score=passage.score))
    return RetrievalSet(question_id=retrieval.question_id, passages=tuple(out))


def retrieval_to_row(retrieval: RetrievalSet, provenance: dict | None = None) -> dict:
    row = {
        "id": retrieval.question_id,
        "passages": [
            {"title": p.title, "text": p.text, "rank": p.rank}
            | ({"score": p.score} if p.score is not None else {})
            for p in retrieval.passages
        ],
    }
    if provenance is not None:
        row["provenance"] = provenance
    return row


def swap_to_row(instance: SwapInstance) -> dict:
    return retrieval_to_row(
        RetrievalSet(question_id=instance.question_id, passages=instance.passages),
        provenance={
            "kind": "entity_swap",
            "question": instance.question_text,
            "original": {
                "surface": instance.original_entity.surface,
                "title": instance.original_entity.title,
            },
            "replacement": {
                "surface": instance.replacement_surface,
                "title": instance.replacement_title,
            },
        },
    )
