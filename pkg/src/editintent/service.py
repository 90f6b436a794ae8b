"""HTTP service behind the human labeling study.

Serves blinded diffs one at a time (no edit comment, author, or date on the
wire), assigns the least-annotated diff first with seeded tie-breaking,
enforces the 250-diff session cap and the one-practice-diff-first flow, and
persists every judgment to an append-only JSONL label log.  Replaying the
log reconstructs the full service state, so restarts are free.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .diffing import EditDiff, diff_from_payload
from .evaluation import AnnotationRecord, metrics_report, record_from_json, record_to_json
from .rules import Category

DEFAULT_CAP = 250
IDLE_TIMEOUT_SECONDS = 2 * 60 * 60

SAMPLE_MAGIC = "editintent-sample"
SAMPLE_VERSION = 1

CATEGORY_DEFINITIONS = [
    {
        "id": Category.CITATION.value,
        "name": "Citations",
        "definition": "The edit adds a reference or citation so a claim can be verified.",
    },
    {
        "id": Category.POINT_OF_VIEW.value,
        "name": "Point-of-view",
        "definition": "The edit rewrites content in a neutral, encyclopedic tone or removes biased wording.",
    },
    {
        "id": Category.CLARIFICATION.value,
        "name": "Clarifications",
        "definition": "The edit specifies or explains an existing fact without adding new information.",
    },
]


class ServiceError(Exception):
    def __init__(self, message: str, status_code: int = 400):
        super().__init__(message)
        self.status_code = status_code


@dataclass
class SampleEntry:
    diff_id: str
    diff: EditDiff
    rule_labels: frozenset[Category]


@dataclass
class Session:
    session_id: str
    annotator_id: str
    practice_done: bool = False
    submitted_count: int = 0
    cap: int = DEFAULT_CAP
    started_at: float = field(default_factory=time.time)
    last_active: float = field(default_factory=time.time)
    current_assignment: Optional[str] = None


def load_sample_file(path: str | Path) -> list[SampleEntry]:
    data = json.loads(Path(path).read_text("utf-8"))
    if data.get("magic") != SAMPLE_MAGIC:
        raise ServiceError(f"not a sample file: {path}", 500)
    entries = []
    for obj in data["entries"]:
        entries.append(
            SampleEntry(
                diff_id=obj["diff_id"],
                diff=diff_from_payload(obj["diff"]),
                rule_labels=frozenset(Category(c) for c in obj.get("rule_labels", [])),
            )
        )
    return entries


def write_sample_file(path: str | Path, entries: list[dict], seed: Optional[int] = None) -> None:
    payload = {"magic": SAMPLE_MAGIC, "version": SAMPLE_VERSION, "seed": seed, "entries": entries}
    Path(path).write_text(json.dumps(payload, sort_keys=True, ensure_ascii=False), "utf-8")


def blinded_payload(entry: SampleEntry) -> dict:
    """The wire form of a diff: id and rendered lines, nothing else.

    The edit comment, author, and timestamps never appear here.
    """
    return {
        "diff_id": entry.diff_id,
        "lines": [
            {
                "old_line": lc.old_line,
                "new_line": lc.new_line,
                "segments": [
                    {
                        "inserted": s.inserted,
                        "deleted": s.deleted,
                        "old_offset": s.old_offset,
                        "new_offset": s.new_offset,
                    }
                    for s in lc.segments
                ],
                "context_before": lc.context_before,
                "context_after": lc.context_after,
            }
            for lc in entry.diff.lines
        ],
    }


class AnnotationService:
    """In-memory session and assignment state over an append-only label log."""

    def __init__(
        self,
        entries: list[SampleEntry],
        practice: SampleEntry,
        log_path: str | Path,
        cap: int = DEFAULT_CAP,
        seed: int = 0,
        idle_timeout: float = IDLE_TIMEOUT_SECONDS,
        clock=time.time,
    ):
        if any(e.diff_id == practice.diff_id for e in entries):
            raise ServiceError("practice diff must not be part of the sample", 500)
        self.entries = {e.diff_id: e for e in entries}
        self.practice = practice
        self.log_path = Path(log_path)
        self.cap = cap
        self.idle_timeout = idle_timeout
        self.clock = clock
        self._lock = threading.Lock()
        self._records: list[AnnotationRecord] = []
        self._labeled_by: dict[str, set[str]] = {}  # diff_id -> annotators
        self._annotator_done: dict[str, set[str]] = {}  # annotator -> diff_ids (practice included)
        self._inflight: dict[str, set[str]] = {}  # diff_id -> annotators assigned right now
        self._sessions: dict[str, Session] = {}
        self._by_annotator: dict[str, str] = {}
        # deterministic tie order for the least-annotated-first policy
        import random

        order = sorted(self.entries)
        random.Random(seed).shuffle(order)
        self._tie_order = {diff_id: i for i, diff_id in enumerate(order)}
        self._replay_log()

    # -- log -------------------------------------------------------------------

    def _replay_log(self) -> None:
        if not self.log_path.exists():
            return
        with self.log_path.open(encoding="utf-8") as fp:
            for line in fp:
                if not line.strip():
                    continue
                record = record_from_json(json.loads(line))
                self._apply_record(record)

    def _apply_record(self, record: AnnotationRecord) -> None:
        self._records.append(record)
        self._annotator_done.setdefault(record.annotator_id, set()).add(record.diff_id)
        if record.diff_id != self.practice.diff_id:
            self._labeled_by.setdefault(record.diff_id, set()).add(record.annotator_id)

    def _append_log(self, record: AnnotationRecord) -> None:
        with self.log_path.open("a", encoding="utf-8") as fp:
            fp.write(json.dumps(record_to_json(record), sort_keys=True, ensure_ascii=False) + "\n")
            fp.flush()

    # -- sessions ----------------------------------------------------------------

    def _expire_idle(self) -> None:
        now = self.clock()
        for session in self._sessions.values():
            if session.current_assignment and now - session.last_active > self.idle_timeout:
                self._inflight.get(session.current_assignment, set()).discard(session.annotator_id)
                session.current_assignment = None

    def create_or_resume_session(self, annotator_id: str) -> Session:
        if not annotator_id or not annotator_id.strip():
            raise ServiceError("annotator_id is required", 422)
        with self._lock:
            self._expire_idle()
            sid = self._by_annotator.get(annotator_id)
            if sid is not None:
                session = self._sessions[sid]
                session.last_active = self.clock()
                return session
            done = self._annotator_done.get(annotator_id, set())
            session = Session(
                session_id=uuid.uuid4().hex,
                annotator_id=annotator_id,
                practice_done=self.practice.diff_id in done,
                submitted_count=len(done - {self.practice.diff_id}),
                cap=self.cap,
            )
            self._sessions[session.session_id] = session
            self._by_annotator[annotator_id] = session.session_id
            return session

    def _session(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise ServiceError(f"unknown session {session_id}", 404)
        return session

    # -- assignment -----------------------------------------------------------------

    def next_diff(self, session_id: str) -> dict:
        with self._lock:
            self._expire_idle()
            session = self._session(session_id)
            session.last_active = self.clock()
            progress = {"submitted": session.submitted_count, "cap": session.cap}
            if not session.practice_done:
                session.current_assignment = self.practice.diff_id
                return {
                    "status": "ok",
                    "practice": True,
                    "progress": progress,
                    "diff": blinded_payload(self.practice),
                }
            if session.submitted_count >= session.cap:
                session.current_assignment = None
                return {"status": "done", "reason": "cap", "progress": progress}
            if session.current_assignment and session.current_assignment != self.practice.diff_id:
                entry = self.entries[session.current_assignment]
                return {
                    "status": "ok",
                    "practice": False,
                    "progress": progress,
                    "diff": blinded_payload(entry),
                }
            done = self._annotator_done.get(session.annotator_id, set())
            candidates = [d for d in self.entries if d not in done]
            if not candidates:
                return {"status": "done", "reason": "pool_exhausted", "progress": progress}
            # fewest (stored + in-flight) annotations first, seeded tie order
            def load(diff_id: str) -> tuple[int, int]:
                count = len(self._labeled_by.get(diff_id, ())) + len(self._inflight.get(diff_id, ()))
                return (count, self._tie_order[diff_id])

            chosen = min(candidates, key=load)
            session.current_assignment = chosen
            self._inflight.setdefault(chosen, set()).add(session.annotator_id)
            return {
                "status": "ok",
                "practice": False,
                "progress": progress,
                "diff": blinded_payload(self.entries[chosen]),
            }

    def submit_labels(
        self,
        session_id: str,
        diff_id: str,
        categories: list[str],
        none_flag: bool,
        comment: Optional[str] = None,
    ) -> dict:
        with self._lock:
            session = self._session(session_id)
            session.last_active = self.clock()
            if session.current_assignment != diff_id:
                raise ServiceError(f"diff {diff_id} is not currently assigned to this session", 409)
            cats = frozenset(Category(c) for c in categories)
            if none_flag and cats:
                raise ServiceError("choose categories or None, not both", 422)
            if not none_flag and not cats:
                raise ServiceError("choose at least one category or None", 422)
            done = self._annotator_done.get(session.annotator_id, set())
            if diff_id in done:
                raise ServiceError(f"diff {diff_id} already labeled by this annotator", 409)
            record = AnnotationRecord(
                diff_id=diff_id,
                annotator_id=session.annotator_id,
                categories=cats,
                none_flag=none_flag,
                comment=comment,
                submitted_at=datetime.now(timezone.utc),
            )
            self._append_log(record)
            self._apply_record(record)
            self._inflight.get(diff_id, set()).discard(session.annotator_id)
            session.current_assignment = None
            if diff_id == self.practice.diff_id:
                session.practice_done = True
            else:
                session.submitted_count += 1
            return {"status": "ok", "submitted_count": session.submitted_count}

    # -- metrics -----------------------------------------------------------------------

    def metrics(self) -> dict:
        with self._lock:
            records = [r for r in self._records if r.diff_id != self.practice.diff_id]
            verdicts = {d: set(e.rule_labels) for d, e in self.entries.items()}
            return metrics_report(records, verdicts, pool_size=len(self.entries))


# --- config + app -----------------------------------------------------------------------


@dataclass
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    sample_path: str = "sample.json"
    log_path: str = "labels.jsonl"
    practice_path: str = ""
    cap: int = DEFAULT_CAP
    seed: int = 0
    static_dir: str = ""


def load_config(path: str | Path) -> ServiceConfig:
    """Parse a key=value config file ('#' starts a comment)."""
    config = ServiceConfig()
    for line_no, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ServiceError(f"bad config line {line_no}: {line!r}", 500)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in ("listen_host", "sample_path", "log_path", "practice_path", "static_dir"):
            setattr(config, key, value)
        elif key in ("listen_port", "cap", "seed"):
            setattr(config, key, int(value))
        else:
            raise ServiceError(f"unknown config key {key!r} at line {line_no}", 500)
    return config


def default_practice_entry() -> SampleEntry:
    from importlib import resources

    data = json.loads(resources.files("editintent.data").joinpath("practice.json").read_text("utf-8"))
    return SampleEntry(
        diff_id=data["diff_id"],
        diff=diff_from_payload(data["diff"]),
        rule_labels=frozenset(),
    )


def load_practice_entry(path: str | Path) -> SampleEntry:
    data = json.loads(Path(path).read_text("utf-8"))
    return SampleEntry(
        diff_id=data["diff_id"],
        diff=diff_from_payload(data["diff"]),
        rule_labels=frozenset(),
    )


try:  # pydantic only matters for the HTTP layer
    from pydantic import BaseModel as _BaseModel

    class SubmitBody(_BaseModel):
        diff_id: str
        categories: list[str] = []
        none_flag: bool = False
        comment: Optional[str] = None

except ImportError:  # pragma: no cover
    SubmitBody = None  # type: ignore[assignment]


def create_app(service: AnnotationService, static_dir: Optional[str] = None):
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    app = FastAPI(title="editintent annotation service")

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc)})

    @app.get("/api/session")
    def get_session(annotator_id: str = ""):
        session = service.create_or_resume_session(annotator_id)
        return {
            "session_id": session.session_id,
            "annotator_id": session.annotator_id,
            "practice_done": session.practice_done,
            "submitted_count": session.submitted_count,
            "cap": session.cap,
        }

    @app.get("/api/session/{session_id}/next")
    def get_next(session_id: str):
        return service.next_diff(session_id)

    @app.post("/api/session/{session_id}/labels")
    def post_labels(session_id: str, body: SubmitBody):
        try:
            return service.submit_labels(
                session_id,
                body.diff_id,
                body.categories,
                body.none_flag,
                body.comment,
            )
        except ValueError as exc:
            raise ServiceError(str(exc), 422) from exc

    @app.get("/api/metrics")
    def get_metrics():
        return service.metrics()

    @app.get("/api/definitions")
    def get_definitions():
        return {"categories": CATEGORY_DEFINITIONS}

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
