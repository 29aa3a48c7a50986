"""HTTP annotation service: dispatches judgment tasks, journals responses,
and reports aggregate stats for the sense-labeling protocol."""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotation import (
    ANSWERS,
    AnnotationResponse,
    AnnotationTask,
    UndefinedAgreementError,
    aggregate,
    fleiss_kappa,
    majority_yes_rate,
    notsure_count,
    read_journal,
    response_matrix,
    write_journal_entry,
)
from .patterns import SenseLabel


class ResponseIn(BaseModel):
    task_id: str
    annotator: str
    answer: str


class AnnotationStore:
    """Task state plus the append-only journal; writes are serialized."""

    def __init__(self, tasks: Sequence[AnnotationTask], journal_path: str | Path):
        self.tasks = list(tasks)
        self.by_id = {t.task_id: t for t in self.tasks}
        self.journal_path = Path(journal_path)
        self._lock = threading.Lock()
        self.responses: list[AnnotationResponse] = read_journal(self.journal_path)
        self._answered: set[tuple[str, str]] = {
            (r.task_id, r.annotator_id) for r in self.responses
        }

    def response_count(self, task_id: str) -> int:
        return sum(1 for r in self.responses if r.task_id == task_id)

    def next_task(self, annotator: str) -> AnnotationTask | None:
        with self._lock:
            counts: dict[str, int] = {}
            for r in self.responses:
                counts[r.task_id] = counts.get(r.task_id, 0) + 1
            for t in self.tasks:
                if (t.task_id, annotator) in self._answered:
                    continue
                if counts.get(t.task_id, 0) < t.required_annotators:
                    return t
            return None

    def submit(self, task_id: str, annotator: str, answer: str) -> AnnotationResponse:
        """Append a response; first submission per (task, annotator) wins."""
        if task_id not in self.by_id:
            raise KeyError(task_id)
        response = AnnotationResponse(
            task_id=task_id, annotator_id=annotator, answer=answer
        )
        with self._lock:
            if (task_id, annotator) in self._answered:
                raise DuplicateResponse(task_id, annotator)
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                write_journal_entry(fh, response)
            self.responses.append(response)
            self._answered.add((task_id, annotator))
        return response

    def complete_tasks(self) -> list[AnnotationTask]:
        counts: dict[str, int] = {}
        for r in self.responses:
            counts[r.task_id] = counts.get(r.task_id, 0) + 1
        return [
            t for t in self.tasks if counts.get(t.task_id, 0) >= t.required_annotators
        ]


class DuplicateResponse(Exception):
    def __init__(self, task_id: str, annotator: str):
        super().__init__(f"{annotator} already answered {task_id}")


def results_payload(store: AnnotationStore) -> dict:
    """Per-sense %majority-yes, kappa, and notsure counts over the complete
    tasks; mirrors the crowd-results table columns."""
    complete = store.complete_tasks()
    verdicts = aggregate(
        [r for r in store.responses if any(t.task_id == r.task_id for t in complete)],
        complete,
    )
    per_sense = {}
    for sense in SenseLabel:
        sense_tasks = [t for t in complete if t.phrase.sense is sense]
        entry: dict = {
            "complete": len(sense_tasks),
            "notsure": notsure_count(store.responses, store.tasks, sense),
        }
        if sense_tasks:
            entry["majority_yes_pct"] = round(
                majority_yes_rate(verdicts, store.tasks, sense), 2
            )
        else:
            entry["majority_yes_pct"] = None
        matrix, raters = response_matrix(store.responses, store.tasks, sense)
        try:
            entry["fleiss_kappa"] = round(fleiss_kappa(matrix, raters), 4)
        except (ValueError, UndefinedAgreementError):
            entry["fleiss_kappa"] = None
        per_sense[sense.value] = entry
    return {
        "verdicts": [
            {"task_id": v.task_id, "accepted": v.accepted, "tally": v.tally}
            for v in verdicts
        ],
        "per_sense": per_sense,
    }


QUESTIONS = {
    SenseLabel.AUDIBLE: "Is this something you can hear?",
    SenseLabel.OLFACTIBLE: "Is this something you can smell?",
}


def create_app(
    tasks: Sequence[AnnotationTask],
    journal_path: str | Path,
    static_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="sensery annotation service")
    store = AnnotationStore(tasks, journal_path)
    app.state.store = store

    @app.get("/api/tasks/next")
    def tasks_next(annotator: str):
        task = store.next_task(annotator)
        if task is None:
            return Response(status_code=204)
        return {
            "task_id": task.task_id,
            "phrase": task.phrase.text,
            "sense": task.phrase.sense.value,
            "question": QUESTIONS[task.phrase.sense],
        }

    @app.post("/api/responses", status_code=201)
    def post_response(body: ResponseIn):
        if body.answer not in ANSWERS:
            return JSONResponse(
                {"error": f"unknown answer {body.answer!r}"}, status_code=400
            )
        try:
            store.submit(body.task_id, body.annotator, body.answer)
        except KeyError:
            return JSONResponse(
                {"error": f"unknown task {body.task_id!r}"}, status_code=404
            )
        except DuplicateResponse as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        return {"status": "recorded"}

    @app.get("/api/progress")
    def progress():
        counts: dict[str, int] = {}
        for r in store.responses:
            counts[r.task_id] = counts.get(r.task_id, 0) + 1
        out = {}
        for sense in SenseLabel:
            sense_tasks = [t for t in store.tasks if t.phrase.sense is sense]
            complete = sum(
                1
                for t in sense_tasks
                if counts.get(t.task_id, 0) >= t.required_annotators
            )
            out[sense.value] = {
                "total": len(sense_tasks),
                "complete": complete,
                "incomplete": len(sense_tasks) - complete,
                "responses": sum(counts.get(t.task_id, 0) for t in sense_tasks),
            }
        return out

    @app.get("/api/results")
    def results():
        return results_payload(store)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
