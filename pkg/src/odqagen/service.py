"""HTTP service that feeds verification tasks to annotators and records labels.

Tasks come from a candidate-assignments file; labels go to an
append-only JSONL log which is fsynced before a submission is
acknowledged and replayed on startup, so a crash never loses an acked
label.  The effective label for a (task, annotator) pair is the last
one submitted.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .categorize import CATEGORIES, CategoryAssignment, load_assignments, make_task_id
from .data import VerificationLabel

TASK_CATEGORIES = ("overlap", "comp_gen", "novel_entity")


def load_guidance(path: str | Path | None = None) -> dict[str, str]:
    """Per-category annotator guidance; bundled text unless a file is given."""
    if path is not None:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    with resources.files("odqagen").joinpath("guidance/guidance.json").open(encoding="utf-8") as f:
        return json.load(f)


@dataclass(frozen=True)
class Task:
    task_id: str
    question_id: str
    question: str
    category: str
    paired: tuple
    entities: tuple
    guidance: str


class LabelLog:
    """Append-only JSONL label log; appends are serialized and fsynced."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.touch(exist_ok=True)

    def replay(self) -> list[VerificationLabel]:
        records = []
        with open(self.path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(
                    VerificationLabel(
                        task_id=obj["task_id"],
                        annotator=obj["annotator"],
                        label=bool(obj["label"]),
                        ts=float(obj["ts"]),
                    )
                )
            except (json.JSONDecodeError, KeyError) as e:
                if i == len(lines) - 1:
                    # torn final line from a crash mid-append; safe to drop
                    continue
                raise ValueError(f"{self.path}:{i + 1}: corrupt label record: {e}") from e
        return records

    def append(self, record: VerificationLabel) -> None:
        line = json.dumps(
            {
                "task_id": record.task_id,
                "annotator": record.annotator,
                "label": record.label,
                "ts": record.ts,
            }
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
                os.fsync(f.fileno())


class TaskStore:
    """In-memory task queue plus the replayed effective-label state."""

    def __init__(self, assignments: list[CategoryAssignment], log: LabelLog, guidance: dict[str, str]):
        self.log = log
        self.tasks: list[Task] = []
        self.by_id: dict[str, Task] = {}
        for assignment in assignments:
            if assignment.category not in TASK_CATEGORIES or not assignment.paired:
                continue
            task = Task(
                task_id=make_task_id(assignment.question_id, assignment.category),
                question_id=assignment.question_id,
                question=assignment.question_text or "",
                category=assignment.category,
                paired=assignment.paired,
                entities=assignment.entities,
                guidance=guidance.get(assignment.category, ""),
            )
            self.tasks.append(task)
            self.by_id[task.task_id] = task
        self._lock = threading.Lock()
        # (task_id, annotator) -> (ts, label)
        self.effective: dict[tuple[str, str], tuple[float, bool]] = {}
        for record in log.replay():
            self._absorb(record)

    def _absorb(self, record: VerificationLabel) -> None:
        key = (record.task_id, record.annotator)
        prior = self.effective.get(key)
        if prior is None or record.ts >= prior[0]:
            self.effective[key] = (record.ts, record.label)

    def next_task(self, annotator: str, category: str | None = None) -> Task | None:
        if category is not None and category not in TASK_CATEGORIES:
            raise KeyError(category)
        for task in self.tasks:
            if category is not None and task.category != category:
                continue
            if (task.task_id, annotator) not in self.effective:
                return task
        return None

    def remaining(self, annotator: str, category: str | None = None) -> int:
        return sum(
            1
            for task in self.tasks
            if (category is None or task.category == category)
            and (task.task_id, annotator) not in self.effective
        )

    def submit(self, task_id: str, annotator: str, label: bool) -> VerificationLabel:
        if task_id not in self.by_id:
            raise KeyError(task_id)
        record = VerificationLabel(task_id=task_id, annotator=annotator, label=label, ts=time.time())
        self.log.append(record)
        with self._lock:
            self._absorb(record)
        return record

    def progress(self) -> dict:
        labeled_tasks = {task_id for task_id, _ in self.effective if task_id in self.by_id}
        categories = {}
        for category in TASK_CATEGORIES:
            total = sum(1 for t in self.tasks if t.category == category)
            labeled = sum(1 for t in self.tasks if t.category == category and t.task_id in labeled_tasks)
            categories[category] = {"labeled": labeled, "total": total}
        return {
            "categories": categories,
            "total": {"labeled": len(labeled_tasks), "total": len(self.tasks)},
        }

    def export_lines(self) -> list[str]:
        rows = sorted(self.effective.items(), key=lambda item: item[0])
        return [
            json.dumps({"task_id": task_id, "annotator": annotator, "label": label, "ts": ts})
            for (task_id, annotator), (ts, label) in rows
        ]


def _task_payload(task: Task, store: "TaskStore") -> dict:
    labeled = any(task_id == task.task_id for task_id, _ in store.effective)
    return {
        "task_id": task.task_id,
        "question_id": task.question_id,
        "question": task.question,
        "category": task.category,
        "status": "labeled" if labeled else "open",
        "paired": [{"id": p.train_id, "question": p.text, "score": p.score} for p in task.paired],
        "entities": [{"surface": m.surface, "title": m.title} for m in task.entities],
        "guidance": task.guidance,
    }


class LabelSubmission(BaseModel):
    task_id: str
    annotator: str
    label: bool


def create_app(
    assignments_path: str | Path,
    labels_path: str | Path,
    guidance_path: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    assignments = load_assignments(assignments_path)
    store = TaskStore(assignments, LabelLog(labels_path), load_guidance(guidance_path))
    app = FastAPI(title="odqagen annotation service")
    app.state.store = store

    @app.get("/api/tasks/next")
    def next_task(annotator: str = Query(...), category: str | None = Query(default=None)):
        try:
            task = store.next_task(annotator, category)
        except KeyError:
            raise HTTPException(status_code=400, detail=f"unknown category '{category}'")
        return {
            "task": _task_payload(task, store) if task else None,
            "remaining": store.remaining(annotator, category),
        }

    @app.post("/api/labels")
    def submit_label(submission: LabelSubmission):
        try:
            record = store.submit(submission.task_id, submission.annotator, submission.label)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown task '{submission.task_id}'")
        return {"ok": True, "task_id": record.task_id, "label": record.label, "ts": record.ts}

    @app.get("/api/progress")
    def progress():
        return store.progress()

    @app.get("/api/export")
    def export():
        lines = store.export_lines()
        body = "\n".join(lines) + ("\n" if lines else "")
        return PlainTextResponse(body, media_type="application/x-ndjson")

    static_root = Path(static_dir) if static_dir else _packaged_static()
    if static_root is not None and static_root.is_dir() and (static_root / "index.html").exists():
        app.mount("/", StaticFiles(directory=static_root, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return (
                "<html><body><h1>odqagen annotation service</h1>"
                "<p>No UI assets found; the JSON API is under /api/.</p></body></html>"
            )

    return app


def _packaged_static() -> Path | None:
    root = resources.files("odqagen").joinpath("static")
    try:
        path = Path(str(root))
    except TypeError:
        return None
    return path if path.is_dir() else None
