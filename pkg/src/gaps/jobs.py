"""Background job manager: explicit job IDs with pollable status.

One worker thread executes jobs in submission order, so long-running syncs
and precomputes never overlap while API reads keep being served.
"""
from __future__ import annotations

import queue
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Callable


class JobStatus(str, Enum):
    queued = "queued"
    running = "running"
    succeeded = "succeeded"
    failed = "failed"


@dataclass
class Job:
    id: str
    kind: str
    status: JobStatus = JobStatus.queued
    progress: float = 0.0
    started: datetime | None = None
    finished: datetime | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "status": self.status.value,
            "progress": self.progress,
            "started": self.started.isoformat() if self.started else None,
            "finished": self.finished.isoformat() if self.finished else None,
            "message": self.message,
        }


class JobManager:
    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._queue: "queue.Queue[tuple[Job, Callable]]" = queue.Queue()
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, kind: str, fn: Callable[[Callable[[float], None]], str]) -> Job:
        """Enqueue fn(progress_cb) -> summary message; returns the queued Job."""
        job = Job(id=uuid.uuid4().hex, kind=kind)
        with self._lock:
            self._jobs[job.id] = job
        self._queue.put((job, fn))
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def wait_all(self, timeout: float | None = None) -> None:
        self._queue.join()

    def _run(self) -> None:
        while True:
            job, fn = self._queue.get()
            job.status = JobStatus.running
            job.started = datetime.now(timezone.utc)

            def set_progress(frac: float) -> None:
                job.progress = min(max(frac, 0.0), 1.0)

            try:
                message = fn(set_progress)
                job.progress = 1.0
                job.message = message or ""
                job.status = JobStatus.succeeded
            except Exception as exc:
                job.message = str(exc)
                job.status = JobStatus.failed
            finally:
                job.finished = datetime.now(timezone.utc)
                self._queue.task_done()
