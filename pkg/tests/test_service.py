import json

import pytest
from fastapi.testclient import TestClient

from odqagen.categorize import (
    CategoryAssignment,
    PairedQuestion,
    finalize_subsets,
    write_assignments,
)
from odqagen.data import load_dataset
from odqagen.service import LabelLog, create_app


def make_assignment(qid, category, text="some question"):
    return CategoryAssignment(
        question_id=qid,
        category=category,
        paired=(PairedQuestion(train_id="t1", score=0.9, text="a train question"),),
        evidence={},
        question_text=text,
    )


@pytest.fixture
def service(tmp_path):
    assignments = [
        make_assignment("q1", "overlap"),
        make_assignment("q2", "comp_gen"),
        make_assignment("q3", "novel_entity"),
        make_assignment("q4", "overlap"),
        CategoryAssignment(question_id="q5", category="uncategorized", paired=(), evidence={}),
    ]
    assignments_path = tmp_path / "assignments.jsonl"
    write_assignments(assignments_path, assignments)
    labels_path = tmp_path / "labels.log"

    def build():
        return TestClient(create_app(assignments_path, labels_path))

    return build, labels_path


def test_next_task_and_exhaustion(service):
    build, _ = service
    client = build()
    seen = []
    while True:
        payload = client.get("/api/tasks/next", params={"annotator": "ann1"}).json()
        if payload["task"] is None:
            break
        task = payload["task"]
        seen.append(task["task_id"])
        client.post("/api/labels", json={"task_id": task["task_id"], "annotator": "ann1", "label": True})
    # stable assignment order; uncategorized rows never become tasks
    assert seen == ["q1::overlap", "q2::comp_gen", "q3::novel_entity", "q4::overlap"]


def test_empty_queue_returns_none(tmp_path):
    assignments_path = tmp_path / "assignments.jsonl"
    write_assignments(assignments_path, [])
    client = TestClient(create_app(assignments_path, tmp_path / "labels.log"))
    payload = client.get("/api/tasks/next", params={"annotator": "x"}).json()
    assert payload["task"] is None
    assert payload["remaining"] == 0


def test_task_payload_contents(service):
    build, _ = service
    client = build()
    task = client.get("/api/tasks/next", params={"annotator": "ann1"}).json()["task"]
    assert task["question"] == "some question"
    assert task["paired"][0]["question"] == "a train question"
    assert task["category"] == "overlap"
    assert task["guidance"]  # bundled guidance text attached


def test_category_filter(service):
    build, _ = service
    client = build()
    task = client.get("/api/tasks/next", params={"annotator": "a", "category": "novel_entity"}).json()["task"]
    assert task["task_id"] == "q3::novel_entity"
    response = client.get("/api/tasks/next", params={"annotator": "a", "category": "weird"})
    assert response.status_code == 400


def test_single_task_then_none_for_same_annotator(service):
    build, _ = service
    client = build()
    first = client.get("/api/tasks/next", params={"annotator": "solo", "category": "comp_gen"}).json()["task"]
    client.post("/api/labels", json={"task_id": first["task_id"], "annotator": "solo", "label": False})
    again = client.get("/api/tasks/next", params={"annotator": "solo", "category": "comp_gen"}).json()["task"]
    assert again is None


def test_two_annotators_each_see_every_task(service):
    build, _ = service
    client = build()
    for annotator in ("ann1", "ann2"):
        count = 0
        while True:
            task = client.get("/api/tasks/next", params={"annotator": annotator}).json()["task"]
            if task is None:
                break
            client.post("/api/labels", json={"task_id": task["task_id"], "annotator": annotator, "label": True})
            count += 1
        assert count == 4
    export = client.get("/api/export").text.strip().splitlines()
    assert len(export) == 8


def test_resubmission_last_write_wins(service):
    build, _ = service
    client = build()
    client.post("/api/labels", json={"task_id": "q1::overlap", "annotator": "a", "label": True})
    client.post("/api/labels", json={"task_id": "q1::overlap", "annotator": "a", "label": False})
    rows = [json.loads(line) for line in client.get("/api/export").text.strip().splitlines()]
    assert len(rows) == 1
    assert rows[0]["label"] is False


def test_submit_then_export_has_label_true(service):
    build, _ = service
    client = build()
    client.post("/api/labels", json={"task_id": "q2::comp_gen", "annotator": "a", "label": True})
    rows = [json.loads(line) for line in client.get("/api/export").text.strip().splitlines()]
    assert rows == [{"task_id": "q2::comp_gen", "annotator": "a", "label": True, "ts": rows[0]["ts"]}]


def test_concurrent_annotators_both_records_retained(service):
    build, _ = service
    client = build()
    client.post("/api/labels", json={"task_id": "q1::overlap", "annotator": "a", "label": True})
    client.post("/api/labels", json={"task_id": "q1::overlap", "annotator": "b", "label": False})
    rows = [json.loads(line) for line in client.get("/api/export").text.strip().splitlines()]
    assert len(rows) == 2


def test_unknown_task_404_and_malformed_422(service):
    build, _ = service
    client = build()
    assert client.post("/api/labels", json={"task_id": "nope", "annotator": "a", "label": True}).status_code == 404
    assert client.post("/api/labels", json={"task_id": "q1::overlap"}).status_code == 422


def test_progress_counts(service):
    build, _ = service
    client = build()
    client.post("/api/labels", json={"task_id": "q1::overlap", "annotator": "a", "label": True})
    client.post("/api/labels", json={"task_id": "q3::novel_entity", "annotator": "b", "label": False})
    progress = client.get("/api/progress").json()
    assert progress["categories"]["overlap"] == {"labeled": 1, "total": 2}
    assert progress["categories"]["comp_gen"] == {"labeled": 0, "total": 1}
    assert progress["categories"]["novel_entity"] == {"labeled": 1, "total": 1}
    assert progress["total"] == {"labeled": 2, "total": 4}


def test_restart_replays_log(service):
    build, _ = service
    client = build()
    client.post("/api/labels", json={"task_id": "q1::overlap", "annotator": "a", "label": True})
    client.post("/api/labels", json={"task_id": "q2::comp_gen", "annotator": "a", "label": False})
    before = client.get("/api/export").text

    restarted = build()  # fresh app over the same log file
    assert restarted.get("/api/export").text == before
    task = restarted.get("/api/tasks/next", params={"annotator": "a"}).json()["task"]
    assert task["task_id"] == "q3::novel_entity"


def test_torn_final_log_line_tolerated(service, tmp_path):
    build, labels_path = service
    client = build()
    client.post("/api/labels", json={"task_id": "q1::overlap", "annotator": "a", "label": True})
    with open(labels_path, "a", encoding="utf-8") as f:
        f.write('{"task_id": "q2::comp_gen", "annot')  # crash mid-append
    replayed = LabelLog(labels_path).replay()
    assert len(replayed) == 1
    client2 = build()
    assert len(client2.get("/api/export").text.strip().splitlines()) == 1


def test_corrupt_interior_line_rejected(tmp_path):
    path = tmp_path / "labels.log"
    path.write_text('garbage\n{"task_id": "t", "annotator": "a", "label": true, "ts": 1.0}\n')
    with pytest.raises(ValueError):
        LabelLog(path).replay()


def test_export_round_trips_into_loader_and_finalize(service, tmp_path):
    build, _ = service
    client = build()
    client.post("/api/labels", json={"task_id": "q1::overlap", "annotator": "a", "label": True})
    client.post("/api/labels", json={"task_id": "q2::comp_gen", "annotator": "a", "label": False})
    export_path = tmp_path / "export.jsonl"
    export_path.write_text(client.get("/api/export").text, encoding="utf-8")

    labels = load_dataset(export_path, "labels")
    assert len(labels) == 2
    assignments = [
        make_assignment("q1", "overlap"),
        make_assignment("q2", "comp_gen"),
        make_assignment("q3", "novel_entity"),
    ]
    partition = finalize_subsets(assignments, labels.records)
    assert partition.overlap == ["q1"]
    assert partition.uncategorized == ["q2", "q3"]


def test_export_byte_stable(service):
    build, _ = service
    client = build()
    client.post("/api/labels", json={"task_id": "q4::overlap", "annotator": "z", "label": True})
    client.post("/api/labels", json={"task_id": "q1::overlap", "annotator": "a", "label": True})
    assert client.get("/api/export").text == client.get("/api/export").text
    # sorted by task then annotator regardless of submission order
    rows = [json.loads(line) for line in client.get("/api/export").text.strip().splitlines()]
    assert [r["task_id"] for r in rows] == ["q1::overlap", "q4::overlap"]


def test_root_serves_placeholder_or_ui(service):
    build, _ = service
    client = build()
    response = client.get("/")
    assert response.status_code == 200


def test_task_status_reflects_other_annotators(service):
    build, _ = service
    client = build()
    first = client.get("/api/tasks/next", params={"annotator": "a"}).json()["task"]
    assert first["status"] == "open"
    client.post("/api/labels", json={"task_id": first["task_id"], "annotator": "a", "label": True})
    # annotator b still gets the task, but it is marked labeled
    same = client.get("/api/tasks/next", params={"annotator": "b"}).json()["task"]
    assert same["task_id"] == first["task_id"]
    assert same["status"] == "labeled"
