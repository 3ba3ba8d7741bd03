"""Domain types and JSONL ingestion for all external inputs.

Every input file is JSONL, one object per line:

- questions:   {"id", "question", "answers": [..], "split"}
- annotations: {"id", "srl": [{"verb", "args": [{"role", "start", "end"}]}],
                "entities": [{"start", "end", "title"}]}
- predictions: {"id", "prediction", "model"}
- retrievals:  {"id", "passages": [{"title", "text", "rank", "score"?}]}
- labels:      {"task_id", "annotator", "label": true|false, "ts"}

Loaders validate each record and either raise :class:`SchemaError`
(carrying the line number) or, for dangling cross-references, drop the
record and report it in :class:`LoadResult.warnings`.  A record is never
dropped silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

SPLITS = ("train", "dev", "test")


class DatasetError(Exception):
    """Problem with an input file."""


class SchemaError(DatasetError):
    def __init__(self, path: str | Path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True, slots=True)
class Question:
    id: str
    text: str
    answers: tuple[str, ...]
    split: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"question {self.id}: empty text")
        if not self.answers:
            raise ValueError(f"question {self.id}: empty answer list")
        if self.split not in SPLITS:
            raise ValueError(f"question {self.id}: bad split {self.split!r}")


@dataclass(frozen=True, slots=True)
class ArgSpan:
    role: str
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad span [{self.start}, {self.end})")


@dataclass(frozen=True, slots=True)
class SrlFrame:
    verb: str
    args: tuple[ArgSpan, ...]

    def __post_init__(self):
        spans = sorted((a.start, a.end) for a in self.args)
        for (_, e1), (s2, _) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ValueError(f"overlapping argument spans in frame {self.verb!r}")


@dataclass(frozen=True, slots=True)
class EntityLink:
    start: int
    end: int
    title: str

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad entity span [{self.start}, {self.end})")


@dataclass(frozen=True, slots=True)
class AnnotationBundle:
    """SRL frames plus entity links for one question, spans in character offsets."""

    question_id: str
    frames: tuple[SrlFrame, ...]
    entity_links: tuple[EntityLink, ...]

    def check_spans(self, text: str) -> None:
        n = len(text)
        for frame in self.frames:
            for arg in frame.args:
                if arg.end > n:
                    raise ValueError(
                        f"question {self.question_id}: argument span "
                        f"[{arg.start}, {arg.end}) outside text of length {n}"
                    )
        for link in self.entity_links:
            if link.end > n:
                raise ValueError(
                    f"question {self.question_id}: entity span "
                    f"[{link.start}, {link.end}) outside text of length {n}"
                )


@dataclass(frozen=True, slots=True)
class Prediction:
    question_id: str
    answer: str
    model_name: str


@dataclass(frozen=True, slots=True)
class Passage:
    title: str
    text: str
    rank: int
    score: float | None = None


@dataclass(frozen=True, slots=True)
class RetrievalSet:
    question_id: str
    passages: tuple[Passage, ...]

    def __post_init__(self):
        for i, passage in enumerate(self.passages):
            if passage.rank != i + 1:
                raise ValueError(
                    f"retrievals for {self.question_id}: rank {passage.rank} "
                    f"at position {i} (ranks must be 1..n with no gaps)"
                )
            if not passage.text:
                raise ValueError(f"retrievals for {self.question_id}: empty passage text")


@dataclass(frozen=True, slots=True)
class VerificationLabel:
    task_id: str
    annotator: str
    label: bool
    ts: float


@dataclass
class LoadResult:
    """Validated records plus warnings for anything dropped along the way."""

    records: list
    warnings: list[str] = field(default_factory=list)

    def __iter__(self) -> Iterator:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed_object); malformed lines raise SchemaError."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(path, lineno, f"malformed JSON: {e}") from e


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def _require(obj: dict, key: str, path, lineno: int, kind: type | tuple = str):
    if key not in obj:
        raise SchemaError(path, lineno, f"missing field '{key}'")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(path, lineno, f"field '{key}' has wrong type {type(value).__name__}")
    return value


def load_questions(path: str | Path) -> LoadResult:
    records: list[Question] = []
    seen: set[tuple[str, str]] = set()
    for lineno, obj in iter_jsonl(path):
        qid = str(_require(obj, "id", path, lineno, (str, int)))
        text = _require(obj, "question", path, lineno)
        answers = _require(obj, "answers", path, lineno, list)
        split = _require(obj, "split", path, lineno)
        if not answers or not all(isinstance(a, str) for a in answers):
            raise SchemaError(path, lineno, "field 'answers' must be a non-empty list of strings")
        key = (split, qid)
        if key in seen:
            raise SchemaError(path, lineno, f"duplicate question id '{qid}' in split '{split}'")
        seen.add(key)
        try:
            records.append(Question(id=qid, text=text, answers=tuple(answers), split=split))
        except ValueError as e:
            raise SchemaError(path, lineno, str(e)) from e
    return LoadResult(records)


def load_annotations(path: str | Path, questions: dict[str, Question] | None = None) -> LoadResult:
    result = LoadResult([])
    for lineno, obj in iter_jsonl(path):
        qid = str(_require(obj, "id", path, lineno, (str, int)))
        if questions is not None and qid not in questions:
            result.warnings.append(f"{path}:{lineno}: annotations for unknown question id '{qid}' dropped")
            continue
        frames = []
        for raw_frame in _require(obj, "srl", path, lineno, list):
            verb = _require(raw_frame, "verb", path, lineno)
            args = []
            for raw_arg in _require(raw_frame, "args", path, lineno, list):
                args.append(
                    ArgSpan(
                        role=_require(raw_arg, "role", path, lineno),
                        start=_require(raw_arg, "start", path, lineno, int),
                        end=_require(raw_arg, "end", path, lineno, int),
                    )
                )
            try:
                frames.append(SrlFrame(verb=verb, args=tuple(args)))
            except ValueError as e:
                raise SchemaError(path, lineno, str(e)) from e
        links = []
        for raw_link in _require(obj, "entities", path, lineno, list):
            links.append(
                EntityLink(
                    start=_require(raw_link, "start", path, lineno, int),
                    end=_require(raw_link, "end", path, lineno, int),
                    title=_require(raw_link, "title", path, lineno),
                )
            )
        bundle = AnnotationBundle(question_id=qid, frames=tuple(frames), entity_links=tuple(links))
        if questions is not None:
            try:
                bundle.check_spans(questions[qid].text)
            except ValueError as e:
                raise SchemaError(path, lineno, str(e)) from e
        result.records.append(bundle)
    return result


def load_predictions(path: str | Path, known_ids: set[str] | None = None) -> LoadResult:
    result = LoadResult([])
    seen: set[tuple[str, str]] = set()
    for lineno, obj in iter_jsonl(path):
        qid = str(_require(obj, "id", path, lineno, (str, int)))
        answer = _require(obj, "prediction", path, lineno)
        model = _require(obj, "model", path, lineno)
        if known_ids is not None and qid not in known_ids:
            result.warnings.append(f"{path}:{lineno}: prediction for unknown question id '{qid}' dropped")
            continue
        if (qid, model) in seen:
            raise SchemaError(path, lineno, f"duplicate prediction for ('{qid}', '{model}')")
        seen.add((qid, model))
        result.records.append(Prediction(question_id=qid, answer=answer, model_name=model))
    return result


def load_retrievals(path: str | Path, known_ids: set[str] | None = None) -> LoadResult:
    result = LoadResult([])
    for lineno, obj in iter_jsonl(path):
        qid = str(_require(obj, "id", path, lineno, (str, int)))
        if known_ids is not None and qid not in known_ids:
            result.warnings.append(f"{path}:{lineno}: retrievals for unknown question id '{qid}' dropped")
            continue
        passages = []
        for raw in _require(obj, "passages", path, lineno, list):
            passages.append(
                Passage(
                    title=_require(raw, "title", path, lineno),
                    text=_require(raw, "text", path, lineno),
                    rank=_require(raw, "rank", path, lineno, int),
                    score=raw.get("score"),
                )
            )
        try:
            result.records.append(RetrievalSet(question_id=qid, passages=tuple(passages)))
        except ValueError as e:
            raise SchemaError(path, lineno, str(e)) from e
    return result


def load_labels(path: str | Path, known_task_ids: set[str] | None = None) -> LoadResult:
    result = LoadResult([])
    for lineno, obj in iter_jsonl(path):
        task_id = _require(obj, "task_id", path, lineno)
        annotator = _require(obj, "annotator", path, lineno)
        label = _require(obj, "label", path, lineno, bool)
        ts = _require(obj, "ts", path, lineno, (int, float))
        if known_task_ids is not None and task_id not in known_task_ids:
            result.warnings.append(f"{path}:{lineno}: label for unknown task '{task_id}' dropped")
            continue
        result.records.append(
            VerificationLabel(task_id=task_id, annotator=annotator, label=label, ts=float(ts))
        )
    return result


_LOADERS: dict[str, Callable] = {
    "questions": load_questions,
    "annotations": load_annotations,
    "predictions": load_predictions,
    "retrievals": load_retrievals,
    "labels": load_labels,
}


def load_dataset(path: str | Path, schema: str, **kwargs) -> LoadResult:
    """Load and validate a JSONL file against one of the named schemas."""
    if schema not in _LOADERS:
        raise ValueError(f"unknown schema '{schema}'; expected one of {sorted(_LOADERS)}")
    if not Path(path).exists():
        raise DatasetError(f"no such file: {path}")
    return _LOADERS[schema](path, **kwargs)


def questions_by_id(questions: Iterable[Question]) -> dict[str, Question]:
    return {q.id: q for q in questions}


def split_of(questions: Iterable[Question], split: str) -> list[Question]:
    return [q for q in questions if q.split == split]
