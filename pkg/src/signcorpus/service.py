"""Annotation task store and local HTTP service.

Tasks are defined once (tasks.jsonl) and annotated through optimistic
concurrency: every write carries the version the client last saw, and only
one write per version is accepted.  Accepted writes go to an append-only log
(annotations.log) before the in-memory state changes; replaying the log from
an empty store reconstructs the exact same task states.  compact() folds the
log into a snapshot (snapshot.jsonl).

Error responses carry machine-readable codes: not_found, conflict,
invalid_annotation, read_only.

No ``from __future__ import annotations`` here: the request models live
inside create_app, and FastAPI cannot resolve stringified references to
closure-scoped classes.
"""

import enum
import json
import os
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable

from .fileio import dumps_record, read_jsonl, write_jsonl
from .glossgrammar import Diagnostic, HomosignGroup, diagnose, parse


class TaskStatus(str, enum.Enum):
    UNANNOTATED = "unannotated"
    DRAFT = "draft"
    DONE = "done"


@dataclass
class AnnotationTask:
    """One sign clip awaiting (or carrying) a gloss annotation."""

    sample_id: str
    episode_id: str
    signer_id: str
    start_frame: int
    end_frame: int
    media: str
    subtitle_text: str
    status: TaskStatus = TaskStatus.UNANNOTATED
    raw_annotation: str | None = None
    version: int = 0

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["status"] = self.status.value
        return data


class NotFoundError(KeyError):
    pass


class ConflictError(RuntimeError):
    def __init__(self, task: AnnotationTask):
        super().__init__(
            f"{task.sample_id}: version mismatch, current is {task.version}"
        )
        self.task = task


class ValidationFailure(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(d.message for d in diagnostics))
        self.diagnostics = diagnostics


class AnnotationStore:
    """Durable task store backed by a snapshot and an append-only log."""

    TASKS_FILE = "tasks.jsonl"
    SNAPSHOT_FILE = "snapshot.jsonl"
    LOG_FILE = "annotations.log"

    def __init__(self, store_dir: str | Path):
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._tasks: dict[str, AnnotationTask] = {}
        self._load()

    # -- persistence ------------------------------------------------------

    def _load(self) -> None:
        tasks_path = self.store_dir / self.TASKS_FILE
        if tasks_path.exists():
            for raw in read_jsonl(tasks_path):
                task = self._task_from_dict(raw)
                self._tasks[task.sample_id] = task
        snapshot_path = self.store_dir / self.SNAPSHOT_FILE
        if snapshot_path.exists():
            for raw in read_jsonl(snapshot_path):
                task = self._task_from_dict(raw)
                self._tasks[task.sample_id] = task
        log_path = self.store_dir / self.LOG_FILE
        if log_path.exists():
            for entry in read_jsonl(log_path):
                self._apply(entry)

    @staticmethod
    def _task_from_dict(raw: dict[str, Any]) -> AnnotationTask:
        return AnnotationTask(
            sample_id=raw["sample_id"],
            episode_id=raw["episode_id"],
            signer_id=raw.get("signer_id", ""),
            start_frame=int(raw["start_frame"]),
            end_frame=int(raw["end_frame"]),
            media=raw.get("media", ""),
            subtitle_text=raw.get("subtitle_text", ""),
            status=TaskStatus(raw.get("status", "unannotated")),
            raw_annotation=raw.get("raw_annotation"),
            version=int(raw.get("version", 0)),
        )

    def _apply(self, entry: dict[str, Any]) -> None:
        task = self._tasks.get(entry["sample_id"])
        if task is None:
            raise ValueError(f"log entry for unknown task {entry['sample_id']!r}")
        task.raw_annotation = entry["raw"]
        task.version = int(entry["version"])
        task.status = TaskStatus.DONE if entry.get("done") else TaskStatus.DRAFT

    def _append_log(self, entry: dict[str, Any]) -> None:
        with (self.store_dir / self.LOG_FILE).open("ab") as fh:
            fh.write((dumps_record(entry) + "\n").encode("utf-8"))
            fh.flush()
            os.fsync(fh.fileno())

    def import_tasks(self, tasks: Iterable[AnnotationTask]) -> int:
        """Define the task set; only allowed while the store is empty."""
        with self._lock:
            if self._tasks:
                raise RuntimeError("store already holds tasks")
            tasks = list(tasks)
            ids = [t.sample_id for t in tasks]
            if len(set(ids)) != len(ids):
                raise ValueError("duplicate sample ids in task import")
            write_jsonl((t.to_dict() for t in tasks), self.store_dir / self.TASKS_FILE)
            self._tasks = {t.sample_id: t for t in tasks}
            return len(tasks)

    def compact(self) -> None:
        """Fold the log into a snapshot and truncate it."""
        with self._lock:
            write_jsonl(
                (t.to_dict() for t in self._sorted_tasks()),
                self.store_dir / self.SNAPSHOT_FILE,
            )
            (self.store_dir / self.LOG_FILE).write_bytes(b"")

    # -- queries ----------------------------------------------------------

    def _sorted_tasks(self) -> list[AnnotationTask]:
        return sorted(
            self._tasks.values(),
            key=lambda t: (t.episode_id, t.start_frame, t.sample_id),
        )

    def list_tasks(
        self,
        status: str | None = None,
        signer: str | None = None,
        episode: str | None = None,
    ) -> list[AnnotationTask]:
        """Tasks ordered by episode then start frame, optionally filtered."""
        with self._lock:
            tasks = self._sorted_tasks()
        if status is not None:
            tasks = [t for t in tasks if t.status.value == status]
        if signer is not None:
            tasks = [t for t in tasks if t.signer_id == signer]
        if episode is not None:
            tasks = [t for t in tasks if t.episode_id == episode]
        return tasks

    def get_task(self, sample_id: str) -> AnnotationTask:
        with self._lock:
            task = self._tasks.get(sample_id)
        if task is None:
            raise NotFoundError(sample_id)
        return task

    def state_bytes(self) -> bytes:
        """Canonical serialization of all task states, for comparisons."""
        with self._lock:
            records = [t.to_dict() for t in self._sorted_tasks()]
        return ("\n".join(dumps_record(r) for r in records)).encode("utf-8")

    # -- writes -----------------------------------------------------------

    @staticmethod
    def validate(raw: str) -> list[Diagnostic]:
        """Diagnostics for an annotation string; empty means valid."""
        if not raw.strip():
            return [
                Diagnostic(
                    position=0,
                    expected="gloss token",
                    found="",
                    message="empty annotation",
                )
            ]
        return diagnose(raw)

    def put_annotation(
        self, sample_id: str, raw: str, expected_version: int, done: bool = False
    ) -> AnnotationTask:
        """Store an annotation if the version matches and the text parses.

        The log line is written (and flushed) before the in-memory state
        changes, so an accepted write is never lost.
        """
        diagnostics = self.validate(raw)
        if diagnostics:
            raise ValidationFailure(diagnostics)
        with self._lock:
            task = self._tasks.get(sample_id)
            if task is None:
                raise NotFoundError(sample_id)
            if task.version != expected_version:
                raise ConflictError(task)
            entry = {
                "sample_id": sample_id,
                "version": task.version + 1,
                "raw": raw,
                "done": bool(done),
            }
            self._append_log(entry)
            self._apply(entry)
            return task


def token_chips(raw: str) -> list[dict[str, Any]]:
    """UI-facing token summaries for a valid annotation string."""
    annotation = parse(raw)
    chips = []
    for token in annotation.tokens:
        if isinstance(token, HomosignGroup):
            chips.append(
                {
                    "render": token.render(),
                    "kind": "homosign",
                    "members": [m.render() for m in token.members],
                }
            )
        else:
            chips.append(
                {
                    "render": token.render(),
                    "kind": "compound",
                    "units": len(token.units),
                    "ill_performed": any(u.ill_performed for u in token.units),
                    "variant": any(u.variant is not None for u in token.units),
                }
            )
    return chips


def create_app(store: AnnotationStore, read_only: bool = False):
    """Build the FastAPI application over a store."""
    from fastapi import FastAPI
    from fastapi.responses import FileResponse, JSONResponse
    from pydantic import BaseModel

    class PutAnnotationBody(BaseModel):
        raw: str
        expected_version: int
        done: bool = False

    class ValidateBody(BaseModel):
        raw: str

    app = FastAPI(title="annotation service")

    def error(status_code: int, code: str, **extra: Any) -> JSONResponse:
        return JSONResponse(status_code=status_code, content={"code": code, **extra})

    @app.get("/tasks")
    def list_tasks(
        status: str | None = None,
        signer: str | None = None,
        episode: str | None = None,
    ):
        tasks = store.list_tasks(status=status, signer=signer, episode=episode)
        return {"tasks": [t.to_dict() for t in tasks]}

    @app.get("/tasks/{sample_id}")
    def get_task(sample_id: str):
        try:
            return store.get_task(sample_id).to_dict()
        except NotFoundError:
            return error(404, "not_found", sample_id=sample_id)

    @app.get("/tasks/{sample_id}/media")
    def get_media(sample_id: str):
        try:
            task = store.get_task(sample_id)
        except NotFoundError:
            return error(404, "not_found", sample_id=sample_id)
        media = Path(task.media)
        if not media.is_absolute():
            media = store.store_dir / media
        if not media.exists():
            return error(404, "not_found", sample_id=sample_id, media=str(media))
        return FileResponse(media)

    @app.put("/tasks/{sample_id}/annotation")
    def put_annotation(sample_id: str, body: PutAnnotationBody):
        if read_only:
            return error(403, "read_only")
        try:
            task = store.put_annotation(
                sample_id, body.raw, body.expected_version, body.done
            )
        except NotFoundError:
            return error(404, "not_found", sample_id=sample_id)
        except ConflictError as exc:
            return error(
                409,
                "conflict",
                current_version=exc.task.version,
                raw_annotation=exc.task.raw_annotation,
            )
        except ValidationFailure as exc:
            return error(
                422,
                "invalid_annotation",
                diagnostics=[asdict(d) for d in exc.diagnostics],
            )
        return {"version": task.version, "status": task.status.value}

    @app.post("/validate")
    def validate(body: ValidateBody):
        diagnostics = store.validate(body.raw)
        if diagnostics:
            return {"ok": False, "diagnostics": [asdict(d) for d in diagnostics]}
        return {"ok": True, "tokens": token_chips(body.raw)}

    return app


def tasks_from_manifest(
    records: Iterable, media_dir: str | None = None
) -> list[AnnotationTask]:
    """Derive annotation tasks from corpus SampleRecords."""
    tasks = []
    for r in records:
        media = f"{r.sample_id}.mp4"
        if media_dir:
            media = str(Path(media_dir) / media)
        tasks.append(
            AnnotationTask(
                sample_id=r.sample_id,
                episode_id=r.episode_id,
                signer_id=r.signer_id,
                start_frame=r.start_frame,
                end_frame=r.end_frame,
                media=media,
                subtitle_text=r.text,
            )
        )
    return tasks
