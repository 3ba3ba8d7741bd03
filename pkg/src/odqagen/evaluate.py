"""Exact-match scoring, retrieval accuracy, and frequency-conditioned breakdowns.

All percentages are 0..100.  A prediction matches when its normalized
form equals the normalized form of any gold alias; passage containment
is a contiguous token run over normalized text.
"""

from __future__ import annotations

import csv
import io
import json
import warnings as _warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .categorize import TrainIndex
from .data import Prediction, Question, RetrievalSet
from .decompose import AtomSet, WH_WORDS
from .patterns import FrequencyBins
from .text import contains_token_span, normalize_answer

SUBSET_KEYS = ("overlap", "comp_gen", "novel_entity")


def exact_match(prediction: str, gold_answers: Iterable[str]) -> bool:
    """True iff the prediction normalizes to the same tokens as any gold alias."""
    predicted = normalize_answer(prediction).tokens
    return any(predicted == normalize_answer(gold).tokens for gold in gold_answers)


@dataclass(frozen=True)
class SubsetScore:
    n: int
    em: float


@dataclass(frozen=True)
class BinRow:
    key: str
    n: int
    em: float


@dataclass
class BinnedTable:
    rows: list[BinRow] = field(default_factory=list)
    excluded: int = 0


@dataclass
class EvalReport:
    subset_em: dict[str, SubsetScore] = field(default_factory=dict)
    retrieval: dict[int, float] = field(default_factory=dict)
    binned: dict[str, BinnedTable] = field(default_factory=dict)
    answer_in_train_rate: float | None = None
    warnings: list[str] = field(default_factory=list)


def predictions_map(predictions: Iterable[Prediction], model: str | None = None) -> dict[str, str]:
    """Collapse Prediction records to qid -> answer, optionally for one model."""
    models = set()
    out: dict[str, str] = {}
    for p in predictions:
        if model is not None and p.model_name != model:
            continue
        models.add(p.model_name)
        out[p.question_id] = p.answer
    if model is None and len(models) > 1:
        raise ValueError(f"predictions from several models {sorted(models)}; pass model=")
    return out


def _percent(hits: int, n: int) -> float:
    return 100.0 * hits / n if n else 0.0


def _em_over_ids(
    ids: Sequence[str],
    predictions: Mapping[str, str],
    questions: Mapping[str, Question],
    warn: list[str] | None = None,
) -> SubsetScore:
    hits = 0
    for qid in ids:
        question = questions.get(qid)
        if question is None:
            raise ValueError(f"no question record for subset id '{qid}'")
        answer = predictions.get(qid)
        if answer is None:
            if warn is not None:
                warn.append(f"missing prediction for '{qid}' counted as wrong")
            continue
        if exact_match(answer, question.answers):
            hits += 1
    return SubsetScore(n=len(ids), em=_percent(hits, len(ids)))


def evaluate(
    predictions: Mapping[str, str],
    questions: Mapping[str, Question],
    subsets: Mapping[str, Sequence[str]] | None = None,
) -> EvalReport:
    """Exact Match per generalization subset plus the full-set total."""
    report = EvalReport()
    for qid in predictions:
        if qid not in questions:
            report.warnings.append(f"prediction for unknown question id '{qid}' ignored")
    report.subset_em["total"] = _em_over_ids(
        list(questions), predictions, questions, report.warnings
    )
    if subsets:
        for key in SUBSET_KEYS:
            ids = subsets.get(key)
            if ids is not None:
                report.subset_em[key] = _em_over_ids(
                    list(ids), predictions, questions, report.warnings
                )
    return report


def first_hit_rank(retrieval: RetrievalSet, gold_answers: Iterable[str]) -> int | None:
    """Lowest rank whose passage contains a gold answer as a token run."""
    golds = [t for t in (normalize_answer(g).tokens for g in gold_answers) if t]
    if not golds:
        return None
    for passage in retrieval.passages:
        passage_tokens = normalize_answer(passage.text).tokens
        if any(contains_token_span(passage_tokens, gold) for gold in golds):
            return passage.rank
    return None


def retrieval_topk_accuracy(
    retrievals: Mapping[str, RetrievalSet],
    questions: Mapping[str, Question],
    ks: Sequence[int],
) -> dict[int, float]:
    """Fraction of questions with a gold-containing passage in the top k, per k."""
    for k in ks:
        if k <= 0:
            raise ValueError(f"k must be positive, got {k}")
    hit_ranks: list[int | None] = []
    for qid, question in questions.items():
        retrieval = retrievals.get(qid)
        if retrieval is None:
            _warnings.warn(f"no retrievals for question '{qid}'; counted as a miss")
            hit_ranks.append(None)
            continue
        hit_ranks.append(first_hit_rank(retrieval, question.answers))
    total = len(hit_ranks)
    return {
        k: _percent(sum(1 for r in hit_ranks if r is not None and r <= k), total)
        for k in ks
    }


def answerable_filter(
    questions: Iterable[Question],
    retrievals: Mapping[str, RetrievalSet],
) -> tuple[list[Question], list[str]]:
    """Keep only questions with at least one gold-containing retrieved passage."""
    kept: list[Question] = []
    warns: list[str] = []
    for question in questions:
        retrieval = retrievals.get(question.id)
        if retrieval is None:
            warns.append(f"no retrievals for question '{question.id}'; excluded")
            continue
        if first_hit_rank(retrieval, question.answers) is not None:
            kept.append(question)
    return kept, warns


def _binned_em(
    keyed: Iterable[tuple[str, str]],
    predictions: Mapping[str, str],
    questions: Mapping[str, Question],
    key_order: Sequence[str],
) -> list[BinRow]:
    groups: dict[str, list[str]] = {}
    for qid, key in keyed:
        groups.setdefault(key, []).append(qid)
    rows = []
    for key in key_order:
        if key in groups:
            score = _em_over_ids(groups[key], predictions, questions)
            rows.append(BinRow(key=key, n=score.n, em=score.em))
    return rows


def entity_frequency_accuracy(
    subset_ids: Sequence[str],
    atoms_by_id: Mapping[str, AtomSet],
    index: TrainIndex,
    predictions: Mapping[str, str],
    questions: Mapping[str, Question],
    bins: FrequencyBins = FrequencyBins(),
    least_frequent: bool = False,
) -> BinnedTable:
    """EM binned by the train frequency of each question's most frequent entity.

    Entity frequency counts training *questions* mentioning the entity.
    ``least_frequent`` switches the per-question key to the rarest entity.
    Questions without entities are excluded and counted.
    """
    table = BinnedTable()
    keyed = []
    for qid in subset_ids:
        entities = atoms_by_id[qid].entity_atoms
        if not entities:
            table.excluded += 1
            continue
        freqs = [index.entity_counts.get(e, 0) for e in entities]
        count = min(freqs) if least_frequent else max(freqs)
        keyed.append((qid, bins.label_of(count)))
    table.rows = _binned_em(keyed, predictions, questions, bins.labels)
    return table


_QW_ORDER = tuple(sorted(WH_WORDS)) + ("-",)


def atom_breakdown(
    subset_ids: Sequence[str],
    atoms_by_id: Mapping[str, AtomSet],
    index: TrainIndex,
    predictions: Mapping[str, str],
    questions: Mapping[str, Question],
    bins: FrequencyBins = FrequencyBins(),
) -> dict[str, BinnedTable]:
    """EM tables keyed by question word, verb train-frequency bin, and other_args count.

    Questions without a question word (or any verb) land in a "-" row of
    the respective table.
    """
    qw_keyed, verb_keyed, args_keyed = [], [], []
    for qid in subset_ids:
        atoms = atoms_by_id[qid]
        qw_keyed.append((qid, atoms.question_word or "-"))
        if atoms.verbs:
            freq = max(index.verb_counts.get(v, 0) for v in atoms.verbs)
            verb_keyed.append((qid, bins.label_of(freq)))
        else:
            verb_keyed.append((qid, "-"))
        args_keyed.append((qid, str(len(atoms.other_args))))

    arg_counts = sorted({key for _, key in args_keyed}, key=int)
    return {
        "question_word": BinnedTable(rows=_binned_em(qw_keyed, predictions, questions, _QW_ORDER)),
        "verb_frequency": BinnedTable(
            rows=_binned_em(verb_keyed, predictions, questions, bins.labels + ("-",))
        ),
        "other_args_count": BinnedTable(rows=_binned_em(args_keyed, predictions, questions, arg_counts)),
    }


def pattern_frequency_accuracy(
    subset_ids: Sequence[str],
    counts_by_qid: Mapping[str, int],
    predictions: Mapping[str, str],
    questions: Mapping[str, Question],
    bins: FrequencyBins = FrequencyBins(),
) -> BinnedTable:
    """EM binned by the train frequency of each question's pattern."""
    keyed = [(qid, bins.label_of(counts_by_qid.get(qid, 0))) for qid in subset_ids]
    return BinnedTable(rows=_binned_em(keyed, predictions, questions, bins.labels))


def answer_in_train_rate(
    predictions: Mapping[str, str],
    train_questions: Iterable[Question],
) -> float:
    """Fraction of predictions that also occur as a train answer (normalized)."""
    train_answers = {
        normalize_answer(answer).tokens
        for q in train_questions
        for answer in q.answers
    }
    values = list(predictions.values())
    if not values:
        return 0.0
    hits = sum(1 for answer in values if normalize_answer(answer).tokens in train_answers)
    return hits / len(values)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "subsets": {name: {"n": s.n, "em": s.em} for name, s in report.subset_em.items()},
        "retrieval": {str(k): v for k, v in report.retrieval.items()},
        "binned": {
            kind: {
                "rows": [{"key": r.key, "n": r.n, "em": r.em} for r in table.rows],
                "excluded": table.excluded,
            }
            for kind, table in report.binned.items()
        },
        "answer_in_train_rate": report.answer_in_train_rate,
        "warnings": report.warnings,
    }


def report_from_dict(obj: dict) -> EvalReport:
    return EvalReport(
        subset_em={
            name: SubsetScore(n=int(s["n"]), em=float(s["em"]))
            for name, s in obj.get("subsets", {}).items()
        },
        retrieval={int(k): float(v) for k, v in obj.get("retrieval", {}).items()},
        binned={
            kind: BinnedTable(
                rows=[BinRow(key=r["key"], n=int(r["n"]), em=float(r["em"])) for r in t["rows"]],
                excluded=int(t.get("excluded", 0)),
            )
            for kind, t in obj.get("binned", {}).items()
        },
        answer_in_train_rate=obj.get("answer_in_train_rate"),
        warnings=list(obj.get("warnings", [])),
    )


def write_report(report: EvalReport, format: str = "json") -> bytes:
    """Serialize a report with stable field ordering; round-trips through load_report."""
    if format == "json":
        return (json.dumps(report_to_dict(report), indent=2) + "\n").encode("utf-8")
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["section", "key", "n", "value"])
        for name, score in report.subset_em.items():
            writer.writerow(["subset", name, score.n, repr(score.em)])
        for k, acc in report.retrieval.items():
            writer.writerow(["retrieval", k, "", repr(acc)])
        for kind, table in report.binned.items():
            for row in table.rows:
                writer.writerow([f"binned:{kind}", row.key, row.n, repr(row.em)])
            writer.writerow([f"binned_excluded:{kind}", "", table.excluded, ""])
        if report.answer_in_train_rate is not None:
            writer.writerow(["answer_in_train_rate", "", "", repr(report.answer_in_train_rate)])
        for i, message in enumerate(report.warnings):
            writer.writerow(["warning", i, "", message])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unsupported report format '{format}'")


def load_report(data: bytes, format: str = "json") -> EvalReport:
    if format == "json":
        return report_from_dict(json.loads(data.decode("utf-8")))
    if format == "csv":
        report = EvalReport()
        reader = csv.reader(io.StringIO(data.decode("utf-8")))
        header = next(reader, None)
        if header != ["section", "key", "n", "value"]:
            raise ValueError("not a report CSV: bad header")
        for section, key, n, value in reader:
            if section == "subset":
                report.subset_em[key] = SubsetScore(n=int(n), em=float(value))
            elif section == "retrieval":
                report.retrieval[int(key)] = float(value)
            elif section.startswith("binned_excluded:"):
                kind = section.split(":", 1)[1]
                report.binned.setdefault(kind, BinnedTable()).excluded = int(n)
            elif section.startswith("binned:"):
                kind = section.split(":", 1)[1]
                report.binned.setdefault(kind, BinnedTable()).rows.append(
                    BinRow(key=key, n=int(n), em=float(value))
                )
            elif section == "answer_in_train_rate":
                report.answer_in_train_rate = float(value)
            elif section == "warning":
                report.warnings.append(value)
            else:
                raise ValueError(f"unknown report section '{section}'")
        return report
    raise ValueError(f"unsupported report format '{format}'")
