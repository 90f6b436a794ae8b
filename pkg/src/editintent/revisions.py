"""Revision records and their input formats (MediaWiki export XML, JSONL).

The XML parser streams with expat so full-history dumps never need to fit in
memory; at most one page's revisions are buffered.  The JSONL format is the
desk-scale test format and may be buffered freely.
"""

from __future__ import annotations

import hashlib
import json
import xml.parsers.expat
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator, Optional

QUALITY_CLASSES = ("Stub", "Start", "C", "B", "GA", "FA", "Unassessed")


class DumpParseError(Exception):
    """Malformed export XML; carries the byte offset of the failure."""

    def __init__(self, message: str, byte_offset: int, line: int):
        super().__init__(f"{message} (byte {byte_offset}, line {line})")
        self.byte_offset = byte_offset
        self.line = line


class JsonlParseError(Exception):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def sha1_of(text: str) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()


def parse_timestamp(value: str) -> datetime:
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Revision:
    """One stored page version.  Immutable; safe to share between threads."""

    rev_id: int
    page_id: int
    parent_id: Optional[int]
    timestamp: datetime
    comment: str
    sha1: str
    text: str
    page_title: str
    quality_class: Optional[str] = None

    def __post_init__(self) -> None:
        if self.rev_id < 0 or self.page_id < 0:
            raise ValueError("rev_id and page_id must be non-negative")
        if self.quality_class is not None and self.quality_class not in QUALITY_CLASSES:
            raise ValueError(f"unknown quality class {self.quality_class!r}")
        if self.timestamp.tzinfo is None:
            object.__setattr__(self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc))

    @property
    def sort_key(self) -> tuple[datetime, int]:
        return (self.timestamp, self.rev_id)

    @property
    def is_page_creation(self) -> bool:
        return self.parent_id is None


@dataclass
class ParseStats:
    pages: int = 0
    revisions: int = 0
    skipped_missing_text: int = 0
    skipped_incomplete: int = 0
    sha1_recomputed: int = 0
    sha1_mismatch: int = 0


def _finish_revision(raw: dict, page_id: int, page_title: str, stats: ParseStats) -> Optional[Revision]:
    if raw.get("text") is None:
        stats.skipped_missing_text += 1
        return None
    if raw.get("rev_id") is None or raw.get("timestamp") is None:
        stats.skipped_incomplete += 1
        return None
    text = raw["text"]
    provided = raw.get("sha1")
    if provided is None:
        sha1 = sha1_of(text)
        stats.sha1_recomputed += 1
    else:
        sha1 = provided
        if provided != sha1_of(text):
            stats.sha1_mismatch += 1
    return Revision(
        rev_id=raw["rev_id"],
        page_id=page_id,
        parent_id=raw.get("parent_id"),
        timestamp=raw["timestamp"],
        comment=raw.get("comment", ""),
        sha1=sha1,
        text=text,
        page_title=page_title,
    )


class _DumpHandler:
    """Expat callbacks building one page's revisions at a time."""

    def __init__(self, stats: ParseStats):
        self.stats = stats
        self.stack: list[str] = []
        self.ready_pages: list[list[Revision]] = []
        self._chars: list[str] = []
        self._capture = False
        self._page_id: Optional[int] = None
        self._page_title = ""
        self._revisions: list[Revision] = []
        self._rev: dict = {}
        self._text_missing = False

    CAPTURED = {"title", "id", "parentid", "timestamp", "comment", "sha1", "text"}

    def start(self, name: str, attrs: dict) -> None:
        self.stack.append(name)
        if name == "page":
            self._page_id = None
            self._page_title = ""
            self._revisions = []
        elif name == "revision":
            self._rev = {}
            self._text_missing = False
        elif name == "text" and attrs.get("deleted") == "deleted":
            self._text_missing = True
        if name in self.CAPTURED:
            self._capture = True
            self._chars = []

    def chars(self, data: str) -> None:
        if self._capture:
            self._chars.append(data)

    def end(self, name: str) -> None:
        parent = self.stack[-2] if len(self.stack) >= 2 else ""
        value = "".join(self._chars)
        if name in self.CAPTURED:
            self._capture = False
        if name == "title" and parent == "page":
            self._page_title = value
        elif name == "id":
            if parent == "page":
                self._page_id = int(value)
            elif parent == "revision":
                self._rev["rev_id"] = int(value)
        elif name == "parentid" and parent == "revision":
            self._rev["parent_id"] = int(value)
        elif name == "timestamp" and parent == "revision":
            self._rev["timestamp"] = parse_timestamp(value)
        elif name == "comment" and parent == "revision":
            self._rev["comment"] = value
        elif name == "sha1" and parent == "revision":
            self._rev["sha1"] = value or None
        elif name == "text" and parent == "revision":
            self._rev["text"] = None if self._text_missing else value
        elif name == "revision":
            if self._page_id is not None:
                rev = _finish_revision(self._rev, self._page_id, self._page_title, self.stats)
                if rev is not None:
                    self._revisions.append(rev)
        elif name == "page":
            self._revisions.sort(key=lambda r: r.sort_key)
            self.ready_pages.append(self._revisions)
            self.stats.pages += 1
            self._revisions = []
        self.stack.pop()
        self._chars = []


def parse_dump(stream: IO[bytes], stats: Optional[ParseStats] = None, chunk_size: int = 1 << 16) -> Iterator[Revision]:
    """Stream revisions out of a MediaWiki export XML dump, grouped by page.

    Revisions come out in ascending (timestamp, rev_id) order within each
    page.  Missing ``<sha1>`` elements are recomputed from the text; a
    revision with suppressed or absent text is skipped and counted.
    """
    stats = stats if stats is not None else ParseStats()
    handler = _DumpHandler(stats)
    parser = xml.parsers.expat.ParserCreate()
    parser.buffer_text = True
    parser.StartElementHandler = handler.start
    parser.EndElementHandler = handler.end
    parser.CharacterDataHandler = handler.chars

    def _parse(data: bytes, final: bool) -> None:
        try:
            parser.Parse(data, final)
        except xml.parsers.expat.ExpatError as exc:
            raise DumpParseError(
                xml.parsers.expat.errors.messages[exc.code],
                byte_offset=parser.ErrorByteIndex,
                line=parser.ErrorLineNumber,
            ) from exc

    while True:
        chunk = stream.read(chunk_size)
        if not chunk:
            _parse(b"", True)
            break
        _parse(chunk, False)
        while handler.ready_pages:
            page = handler.ready_pages.pop(0)
            stats.revisions += len(page)
            yield from page
    while handler.ready_pages:
        page = handler.ready_pages.pop(0)
        stats.revisions += len(page)
        yield from page


_REQUIRED_JSONL = ("rev_id", "page_id", "timestamp", "text")


def revision_from_json(obj: dict) -> Revision:
    for key in _REQUIRED_JSONL:
        if key not in obj:
            raise KeyError(key)
    text = obj["text"]
    provided = obj.get("sha1")
    return Revision(
        rev_id=obj["rev_id"],
        page_id=obj["page_id"],
        parent_id=obj.get("parent_id"),
        timestamp=parse_timestamp(obj["timestamp"]),
        comment=obj.get("comment", ""),
        sha1=provided if provided else sha1_of(text),
        text=text,
        page_title=obj.get("page_title", ""),
        quality_class=obj.get("quality_class"),
    )


def revision_to_json(rev: Revision) -> dict:
    return {
        "rev_id": rev.rev_id,
        "page_id": rev.page_id,
        "parent_id": rev.parent_id,
        "timestamp": format_timestamp(rev.timestamp),
        "comment": rev.comment,
        "sha1": rev.sha1,
        "text": rev.text,
        "page_title": rev.page_title,
        "quality_class": rev.quality_class,
    }


def parse_jsonl(lines: Iterable[str], stats: Optional[ParseStats] = None) -> Iterator[Revision]:
    """Parse one-revision-per-line JSON, regrouped by page and re-sorted.

    The whole stream is buffered: this is the small-fixture format, not the
    dump path.  Pages come out in ascending page_id order.
    """
    stats = stats if stats is not None else ParseStats()
    by_page: dict[int, list[Revision]] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise JsonlParseError(f"invalid JSON: {exc.msg}", line_no) from exc
        try:
            rev = revision_from_json(obj)
        except KeyError as exc:
            raise JsonlParseError(f"missing field {exc.args[0]!r}", line_no) from exc
        except (TypeError, ValueError) as exc:
            raise JsonlParseError(str(exc), line_no) from exc
        by_page.setdefault(rev.page_id, []).append(rev)
    for page_id in sorted(by_page):
        revs = sorted(by_page[page_id], key=lambda r: r.sort_key)
        stats.pages += 1
        stats.revisions += len(revs)
        yield from revs


def serialize_jsonl(revisions: Iterable[Revision]) -> Iterator[str]:
    for rev in revisions:
        yield json.dumps(revision_to_json(rev), sort_keys=True, ensure_ascii=False)
