"""Command-line entry points for the full pipeline.

decompose -> categorize -> (serve / labels) -> finalize -> patterns / evaluate / ablate
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import ablate as ablate_mod
from .categorize import (
    GeneralizationCategorizer,
    build_train_index,
    finalize_subsets,
    load_assignments,
    load_subsets,
    write_assignments,
    write_subsets,
)
from .data import (
    AnnotationBundle,
    load_dataset,
    questions_by_id,
    write_jsonl,
)
from .decompose import derive_atoms, load_atoms, write_atoms
from .evaluate import (
    EvalReport,
    answer_in_train_rate,
    atom_breakdown,
    entity_frequency_accuracy,
    evaluate,
    exact_match,
    pattern_frequency_accuracy,
    predictions_map,
    retrieval_topk_accuracy,
    write_report,
)
from .patterns import FrequencyBins, PatternFrequency, bin_patterns

_EMPTY_BUNDLE = AnnotationBundle(question_id="", frames=(), entity_links=())


def _warn(messages):
    for message in messages:
        click.echo(f"warning: {message}", err=True)


def _pair_atoms(questions, atom_sets):
    """Join questions with their atom sets by id, warning on mismatches."""
    by_id = questions_by_id(questions)
    pairs = []
    matched = set()
    for atoms in atom_sets:
        question = by_id.get(atoms.question_id)
        if question is None:
            click.echo(f"warning: atoms for unknown question '{atoms.question_id}' skipped", err=True)
            continue
        matched.add(atoms.question_id)
        pairs.append((question, atoms))
    for qid in by_id:
        if qid not in matched:
            click.echo(f"warning: question '{qid}' has no atoms row; skipped", err=True)
    return pairs


@click.group()
def main():
    """Audit train/test generalization for open-domain QA datasets."""


@main.command()
@click.option("--questions", "questions_path", required=True, type=click.Path(exists=True))
@click.option("--annotations", "annotations_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def decompose(questions_path, annotations_path, out_path):
    """Derive each question's atoms from its SRL frames and entity links."""
    questions = load_dataset(questions_path, "questions")
    by_id = questions_by_id(questions)
    annotations = load_dataset(annotations_path, "annotations", questions=by_id)
    _warn(annotations.warnings)
    bundles = {b.question_id: b for b in annotations}
    atom_sets = [
        derive_atoms(q, bundles.get(q.id, _EMPTY_BUNDLE)) for q in questions
    ]
    write_atoms(out_path, atom_sets)
    click.echo(f"wrote {len(atom_sets)} atom sets to {out_path}")


@main.command()
@click.option("--train-atoms", required=True, type=click.Path(exists=True))
@click.option("--test-atoms", required=True, type=click.Path(exists=True))
@click.option("--train-questions", required=True, type=click.Path(exists=True))
@click.option("--test-questions", required=True, type=click.Path(exists=True))
@click.option("--tau", default=0.5, show_default=True, type=float)
@click.option("--pairs-k", default=5, show_default=True, type=int)
@click.option("--novel-any-atom", is_flag=True, help="Treat any unseen atom (not just entities) as novel.")
@click.option("--out", "out_path", required=True, type=click.Path())
def categorize(train_atoms, test_atoms, train_questions, test_questions, tau, pairs_k, novel_any_atom, out_path):
    """Assign candidate categories and verification pairs to test questions."""
    train_pairs = _pair_atoms(load_dataset(train_questions, "questions").records, load_atoms(train_atoms))
    test_pairs = _pair_atoms(load_dataset(test_questions, "questions").records, load_atoms(test_atoms))
    categorizer = GeneralizationCategorizer(tau=tau, pairs_k=pairs_k, novel_any_atom=novel_any_atom)
    categorizer.fit(train_pairs)
    assignments = categorizer.assign(test_pairs)
    write_assignments(out_path, assignments)
    counts = {}
    for a in assignments:
        counts[a.category] = counts.get(a.category, 0) + 1
    click.echo(f"wrote {len(assignments)} assignments to {out_path}: {counts}")


@main.command()
@click.option("--assignments", "assignments_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--adjudication", default="unanimous", show_default=True,
              type=click.Choice(["unanimous", "majority", "none"]))
@click.option("--auto-accept", is_flag=True, help="Admit unlabeled candidates to their category.")
@click.option("--out", "out_path", required=True, type=click.Path())
def finalize(assignments_path, labels_path, adjudication, auto_accept, out_path):
    """Apply annotator labels to produce the final disjoint subsets."""
    assignments = load_assignments(assignments_path)
    labels = load_dataset(labels_path, "labels")
    _warn(labels.warnings)
    partition = finalize_subsets(assignments, labels.records, adjudication=adjudication, auto_accept=auto_accept)
    write_subsets(out_path, partition)
    if partition.disputed:
        click.echo(f"needs adjudication ({len(partition.disputed)}): {partition.disputed}", err=True)
    click.echo(
        f"overlap={len(partition.overlap)} comp_gen={len(partition.comp_gen)} "
        f"novel_entity={len(partition.novel_entity)} uncategorized={len(partition.uncategorized)} "
        f"coverage={partition.coverage:.3f}"
    )


@main.command()
@click.option("--train-questions", required=True, type=click.Path(exists=True))
@click.option("--train-atoms", required=True, type=click.Path(exists=True))
@click.option("--test-questions", required=True, type=click.Path(exists=True))
@click.option("--test-atoms", required=True, type=click.Path(exists=True))
@click.option("--subsets", "subsets_path", type=click.Path(exists=True), default=None,
              help="Restrict/refine the report per generalization subset.")
@click.option("--bins", default="0,1,5,20,100,500", show_default=True)
@click.option("--no-unify-prepositions", is_flag=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def patterns(train_questions, train_atoms, test_questions, test_atoms, subsets_path, bins, no_unify_prepositions, out_path):
    """Bin test questions by the train-set frequency of their question pattern."""
    unify = not no_unify_prepositions
    bin_edges = FrequencyBins.parse(bins)
    train_pairs = _pair_atoms(load_dataset(train_questions, "questions").records, load_atoms(train_atoms))
    test_pairs = _pair_atoms(load_dataset(test_questions, "questions").records, load_atoms(test_atoms))
    freq = PatternFrequency(unify_prepositions=unify).fit(train_pairs)

    groups = {"all": test_pairs}
    if subsets_path:
        subsets = load_subsets(subsets_path)
        by_id = {q.id: (q, a) for q, a in test_pairs}
        for name in ("overlap", "comp_gen", "novel_entity"):
            groups[name] = [by_id[qid] for qid in subsets.get(name, ()) if qid in by_id]

    report = {"bin_edges": list(bin_edges.edges), "subsets": {}}
    for name, pairs in groups.items():
        binning = bin_patterns(pairs, freq.table_, bin_edges, unify)
        report["subsets"][name] = {
            "total": binning.total,
            "bins": [
                {"bin": b.label, "n": len(b.question_ids), "fraction": b.fraction}
                for b in binning.bins
            ],
        }
    Path(out_path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    click.echo(f"wrote pattern report to {out_path}")


@main.command(name="evaluate")
@click.option("--questions", "questions_path", required=True, type=click.Path(exists=True))
@click.option("--predictions", "predictions_path", required=True, type=click.Path(exists=True))
@click.option("--subsets", "subsets_path", type=click.Path(exists=True), default=None)
@click.option("--retrievals", "retrievals_path", type=click.Path(exists=True), default=None)
@click.option("--ks", default="20,100", show_default=True)
@click.option("--model", default=None, help="Needed when the predictions file mixes models.")
@click.option("--train-questions", type=click.Path(exists=True), default=None,
              help="Enables the answer-in-train rate and frequency analyses.")
@click.option("--train-atoms", type=click.Path(exists=True), default=None)
@click.option("--test-atoms", type=click.Path(exists=True), default=None)
@click.option("--analysis-subset", default="comp_gen", show_default=True,
              help="Subset the binned analyses run over (requires --subsets).")
@click.option("--bins", default="0,1,5,20,100,500", show_default=True)
@click.option("--format", "fmt", default="json", type=click.Choice(["json", "csv"]), show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def evaluate_cmd(questions_path, predictions_path, subsets_path, retrievals_path, ks, model,
                 train_questions, train_atoms, test_atoms, analysis_subset, bins, fmt, out_path):
    """Score predictions: EM per subset, retrieval accuracy, binned analyses."""
    questions = questions_by_id(load_dataset(questions_path, "questions"))
    loaded = load_dataset(predictions_path, "predictions", known_ids=set(questions))
    _warn(loaded.warnings)
    preds = predictions_map(loaded.records, model=model)
    subsets = load_subsets(subsets_path) if subsets_path else None

    report = evaluate(preds, questions, subsets)

    if retrievals_path:
        retrievals = {r.question_id: r for r in load_dataset(retrievals_path, "retrievals", known_ids=set(questions))}
        k_values = [int(k) for k in ks.split(",") if k.strip()]
        report.retrieval = retrieval_topk_accuracy(retrievals, questions, k_values)

    if train_questions:
        train_qs = load_dataset(train_questions, "questions").records
        report.answer_in_train_rate = answer_in_train_rate(preds, train_qs)
        if train_atoms and test_atoms:
            bin_edges = FrequencyBins.parse(bins)
            train_pairs = _pair_atoms(train_qs, load_atoms(train_atoms))
            test_sets = load_atoms(test_atoms)
            atoms_by_id = {a.question_id: a for a in test_sets}
            index = build_train_index((a for _, a in train_pairs), train_qs)
            if subsets and analysis_subset in subsets:
                ids = [qid for qid in subsets[analysis_subset] if qid in atoms_by_id]
            else:
                ids = [qid for qid in questions if qid in atoms_by_id]
            freq = PatternFrequency().fit(train_pairs)
            index.pattern_freq = dict(freq.table_)
            counts = {
                qid: freq.table_.get(freq.pattern_of(questions[qid], atoms_by_id[qid]).text, 0)
                for qid in ids
                if qid in questions
            }
            report.binned["pattern_frequency"] = pattern_frequency_accuracy(ids, counts, preds, questions, bin_edges)
            report.binned["entity_frequency"] = entity_frequency_accuracy(
                ids, atoms_by_id, index, preds, questions, bin_edges
            )
            report.binned.update(atom_breakdown(ids, atoms_by_id, index, preds, questions, bin_edges))

    Path(out_path).write_bytes(write_report(report, fmt))
    _warn(report.warnings)
    for name, score in report.subset_em.items():
        click.echo(f"{name}: n={score.n} EM={score.em:.2f}")
    for k, acc in report.retrieval.items():
        click.echo(f"top-{k}: {acc:.2f}")


@main.group()
def ablate():
    """Generate modified inputs for reader-model ablations."""


def _load_subset_ids(subsets_path, name):
    subsets = load_subsets(subsets_path)
    return list(subsets.get(name, ()))


@ablate.command()
@click.option("--questions", "questions_path", required=True, type=click.Path(exists=True))
@click.option("--test-atoms", required=True, type=click.Path(exists=True))
@click.option("--train-atoms", required=True, type=click.Path(exists=True))
@click.option("--retrievals", "retrievals_path", required=True, type=click.Path(exists=True))
@click.option("--subsets", "subsets_path", required=True, type=click.Path(exists=True))
@click.option("--sample", default=None, type=int, help="Randomly sample this many eligible questions.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def swap(questions_path, test_atoms, train_atoms, retrievals_path, subsets_path, sample, seed, out_path):
    """Entity-swap the novel-entity subset."""
    questions = questions_by_id(load_dataset(questions_path, "questions"))
    atoms_by_id = {a.question_id: a for a in load_atoms(test_atoms)}
    retrievals = {r.question_id: r for r in load_dataset(retrievals_path, "retrievals")}
    index = build_train_index(load_atoms(train_atoms))
    ids = _load_subset_ids(subsets_path, "novel_entity")

    rows, skipped = [], {}
    for qid in ids:
        if qid not in questions or qid not in atoms_by_id or qid not in retrievals:
            skipped[qid] = "missing-inputs"
            continue
        outcome = ablate_mod.entity_swap(questions[qid], atoms_by_id[qid], retrievals[qid], index, seed)
        if isinstance(outcome, ablate_mod.Ineligible):
            skipped[qid] = outcome.reason
            continue
        rows.append(ablate_mod.swap_to_row(outcome))
    if sample is not None and len(rows) > sample:
        rng = ablate_mod.rng_for(seed, "swap-sample")
        rows = rng.sample(rows, sample)
    write_jsonl(out_path, rows)
    click.echo(f"wrote {len(rows)} swapped questions to {out_path} ({len(skipped)} ineligible)")
    for qid, reason in skipped.items():
        click.echo(f"ineligible {qid}: {reason}", err=True)


@ablate.command()
@click.option("--questions", "questions_path", required=True, type=click.Path(exists=True))
@click.option("--predictions", "predictions_path", required=True, type=click.Path(exists=True))
@click.option("--retrievals", "retrievals_path", required=True, type=click.Path(exists=True))
@click.option("--model", default=None)
@click.option("--mask-token", default="", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def mask(questions_path, predictions_path, retrievals_path, model, mask_token, out_path):
    """Equalize predicted vs gold mention counts for incorrectly answered questions."""
    questions = questions_by_id(load_dataset(questions_path, "questions"))
    preds = predictions_map(load_dataset(predictions_path, "predictions").records, model=model)
    retrievals = {r.question_id: r for r in load_dataset(retrievals_path, "retrievals")}

    rows, skipped = [], {}
    for qid, retrieval in retrievals.items():
        question, predicted = questions.get(qid), preds.get(qid)
        if question is None or predicted is None:
            skipped[qid] = "missing-inputs"
            continue
        if exact_match(predicted, question.answers):
            skipped[qid] = "answered-correctly"
            continue
        outcome = ablate_mod.answer_mask(retrieval, predicted, question.answers, mask_token)
        if isinstance(outcome, ablate_mod.Ineligible):
            skipped[qid] = outcome.reason
            continue
        from .data import RetrievalSet

        rows.append(
            ablate_mod.retrieval_to_row(
                RetrievalSet(question_id=qid, passages=outcome),
                provenance={"kind": "answer_mask", "prediction": predicted, "mask_token": mask_token},
            )
        )
    write_jsonl(out_path, rows)
    click.echo(f"wrote {len(rows)} masked retrieval sets to {out_path} ({len(skipped)} ineligible)")


@ablate.command()
@click.option("--retrievals", "retrievals_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--questions", "questions_path", type=click.Path(exists=True), default=None,
              help="Needed with --keep-gold to locate gold passages.")
@click.option("--fraction", required=True, type=float)
@click.option("--keep-gold", is_flag=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def randomize(retrievals_path, corpus_path, questions_path, fraction, keep_gold, seed, out_path):
    """Replace a fraction of each retrieval set with random pool passages."""
    retrievals = load_dataset(retrievals_path, "retrievals").records
    pool = ablate_mod.load_passage_pool(corpus_path)
    questions = questions_by_id(load_dataset(questions_path, "questions")) if questions_path else {}
    if keep_gold and not questions:
        raise click.UsageError("--keep-gold requires --questions for the gold answers")

    rows, skipped = [], {}
    for retrieval in retrievals:
        gold = questions[retrieval.question_id].answers if retrieval.question_id in questions else ()
        outcome = ablate_mod.randomize_passages(
            retrieval, fraction, pool, keep_gold=keep_gold, rng_seed=seed, gold_answers=gold
        )
        if isinstance(outcome, ablate_mod.Ineligible):
            skipped[retrieval.question_id] = outcome.reason
            continue
        rows.append(
            ablate_mod.retrieval_to_row(
                outcome,
                provenance={"kind": "randomize", "fraction": fraction, "keep_gold": keep_gold, "seed": seed},
            )
        )
    write_jsonl(out_path, rows)
    click.echo(f"wrote {len(rows)} randomized retrieval sets to {out_path} ({len(skipped)} ineligible)")


@main.command()
@click.option("--assignments", "assignments_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path())
@click.option("--guidance", "guidance_path", type=click.Path(exists=True), default=None)
@click.option("--static-dir", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(assignments_path, labels_path, guidance_path, static_dir, host, port):
    """Serve verification tasks to annotators over HTTP."""
    import uvicorn

    from .service import create_app

    app = create_app(assignments_path, labels_path, guidance_path, static_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
