"""Acceptance criterion 10 (secondary component).

The keyboard-driven browser half of the criterion runs under vitest in
frontend/ (scripted 50-task session against a faithful API fake; run
`npm test` there).  This module drives the real service over HTTP for
the rest: a scripted 50-task labeling session that survives a
mid-session restart via log replay, exports exactly the scripted
sequence, and feeds finalize_subsets.  It also checks that the built UI
is served at / when the frontend assets are present.
"""

from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from odqagen.categorize import (
    CategoryAssignment,
    PairedQuestion,
    finalize_subsets,
    load_assignments,
    write_assignments,
)
from odqagen.data import load_dataset
from odqagen.service import create_app

from test_acceptance import criterion

CATEGORIES = ("overlap", "comp_gen", "novel_entity")


def _make_assignments(n=50):
    return [
        CategoryAssignment(
            question_id=f"q{i:02d}",
            category=CATEGORIES[i % 3],
            paired=(PairedQuestion(train_id=f"t{i}", score=0.8, text=f"train question {i}"),),
            evidence={},
            question_text=f"test question {i}",
        )
        for i in range(n)
    ]


@criterion(10, "scripted 50-task session: export exact, restart-safe, finalize-consumable")
def test_criterion_10_end_to_end_session(tmp_path):
    assignments = _make_assignments(50)
    assignments_path = tmp_path / "assignments.jsonl"
    labels_path = tmp_path / "labels.log"
    write_assignments(assignments_path, assignments)

    script = {a.question_id: (i % 3 != 1) for i, a in enumerate(assignments)}

    def label_next(client, annotator="scripter"):
        payload = client.get("/api/tasks/next", params={"annotator": annotator}).json()
        task = payload["task"]
        if task is None:
            return None
        qid = task["question_id"]
        response = client.post(
            "/api/labels",
            json={"task_id": task["task_id"], "annotator": annotator, "label": script[qid]},
        )
        assert response.status_code == 200
        return task["task_id"]

    # first half of the session
    client = TestClient(create_app(assignments_path, labels_path))
    for _ in range(25):
        assert label_next(client) is not None
    # one undo-and-flip: resubmit q03 with the opposite label (last write wins)
    script["q03"] = not script["q03"]
    assert (
        client.post(
            "/api/labels",
            json={"task_id": "q03::overlap", "annotator": "scripter", "label": script["q03"]},
        ).status_code
        == 200
    )
    export_before = client.get("/api/export").text

    # abrupt restart: a fresh app over the same log must replay to the same state
    client = TestClient(create_app(assignments_path, labels_path))
    assert client.get("/api/export").text == export_before

    # second half continues where the session left off
    done = 0
    while label_next(client) is not None:
        done += 1
    assert done == 25

    export_lines = client.get("/api/export").text.strip().splitlines()
    rows = [json.loads(line) for line in export_lines]
    assert len(rows) == 50
    got = {row["task_id"].split("::")[0]: row["label"] for row in rows}
    assert got == script  # export equals the scripted sequence exactly

    # the export feeds subset finalization without error
    export_path = tmp_path / "labels_export.jsonl"
    export_path.write_text(client.get("/api/export").text, encoding="utf-8")
    labels = load_dataset(export_path, "labels")
    assert labels.warnings == []
    partition = finalize_subsets(load_assignments(assignments_path), labels.records)
    admitted = len(partition.overlap) + len(partition.comp_gen) + len(partition.novel_entity)
    expected_admitted = sum(script.values())
    assert admitted == expected_admitted
    assert len(partition.uncategorized) == 50 - expected_admitted


@criterion(10.1, "built annotation UI served at / by the primary service")
def test_built_ui_served(tmp_path):
    import odqagen

    static_dir = __import__("pathlib").Path(odqagen.__file__).parent / "static"
    if not (static_dir / "index.html").exists():
        pytest.skip("frontend not built; run `npm run build` in frontend/")
    assignments_path = tmp_path / "assignments.jsonl"
    write_assignments(assignments_path, _make_assignments(3))
    client = TestClient(create_app(assignments_path, tmp_path / "labels.log"))
    page = client.get("/")
    assert page.status_code == 200
    assert 'id="app"' in page.text
    js = client.get("/js/main.js")
    assert js.status_code == 200
