"""Page-indexed on-disk revision store.

Layout (documented, versioned):

    <root>/index.json        {"magic": "editintent-store", "version": 1,
                              "pages": {"<page_id>": {"title": ..., "count": N,
                                                      "quality_class": ...}}}
    <root>/page-<id>.jsonl   first line {"magic": "editintent-page",
                                         "version": 1, "page_id": <id>},
                             then one revision JSON object per line.

One writer, many readers: writes are serialized through a lock and appended
line-at-a-time; readers only ever open files for reading.  Revisions are
deduplicated by rev_id on put, so re-ingesting is idempotent.
"""

from __future__ import annotations

import json
import threading
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .revisions import QUALITY_CLASSES, Revision, revision_from_json, revision_to_json

STORE_MAGIC = "editintent-store"
PAGE_MAGIC = "editintent-page"
STORE_VERSION = 1


class StoreError(Exception):
    pass


class RevisionStore:
    def __init__(self, root: str | Path, create: bool = True):
        self.root = Path(root)
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
        elif not self.root.is_dir():
            raise StoreError(f"store directory not found: {self.root}")
        self._lock = threading.RLock()
        self._pages: dict[int, dict] = {}
        self._known_ids: dict[int, set[int]] = {}
        self._dirty = False
        self._load_index()

    # -- index ---------------------------------------------------------------

    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _page_path(self, page_id: int) -> Path:
        return self.root / f"page-{page_id}.jsonl"

    def _load_index(self) -> None:
        path = self._index_path()
        if path.exists():
            data = json.loads(path.read_text("utf-8"))
            if data.get("magic") != STORE_MAGIC:
                raise StoreError(f"not a revision store: {path}")
            if data.get("version") != STORE_VERSION:
                raise StoreError(f"unsupported store version {data.get('version')}")
            self._pages = {int(k): v for k, v in data.get("pages", {}).items()}
        else:
            # tolerate a missing index by rebuilding from the page files
            for pf in sorted(self.root.glob("page-*.jsonl")):
                pid = int(pf.stem.split("-", 1)[1])
                self._pages[pid] = {"title": "", "count": None, "quality_class": None}
            if self._pages:
                self._dirty = True

    def flush(self) -> None:
        with self._lock:
            if not self._dirty:
                return
            payload = {
                "magic": STORE_MAGIC,
                "version": STORE_VERSION,
                "pages": {str(k): v for k, v in sorted(self._pages.items())},
            }
            tmp = self._index_path().with_suffix(".json.tmp")
            tmp.write_text(json.dumps(payload, sort_keys=True), "utf-8")
            tmp.replace(self._index_path())
            self._dirty = False

    def close(self) -> None:
        self.flush()

    def __enter__(self) -> "RevisionStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- writes ---------------------------------------------------------------

    def _ids_for(self, page_id: int) -> set[int]:
        ids = self._known_ids.get(page_id)
        if ids is None:
            ids = {r.rev_id for r in self._read_page(page_id)}
            self._known_ids[page_id] = ids
        return ids

    def put(self, rev: Revision) -> bool:
        """Append one revision; returns False if its rev_id is already stored."""
        with self._lock:
            ids = self._ids_for(rev.page_id)
            if rev.rev_id in ids:
                return False
            path = self._page_path(rev.page_id)
            is_new = not path.exists()
            with path.open("a", encoding="utf-8") as fp:
                if is_new:
                    header = {"magic": PAGE_MAGIC, "version": STORE_VERSION, "page_id": rev.page_id}
                    fp.write(json.dumps(header, sort_keys=True) + "\n")
                fp.write(json.dumps(revision_to_json(rev), sort_keys=True, ensure_ascii=False) + "\n")
            ids.add(rev.rev_id)
            entry = self._pages.setdefault(rev.page_id, {"title": "", "count": 0, "quality_class": None})
            entry["count"] = len(ids)
            if rev.page_title:
                entry["title"] = rev.page_title
            self._dirty = True
            return True

    def put_many(self, revisions: Iterable[Revision]) -> int:
        added = 0
        for rev in revisions:
            if self.put(rev):
                added += 1
        self.flush()
        return added

    def set_quality_class(self, page_id: int, quality_class: Optional[str]) -> None:
        if quality_class is not None and quality_class not in QUALITY_CLASSES:
            raise StoreError(f"unknown quality class {quality_class!r}")
        with self._lock:
            entry = self._pages.setdefault(page_id, {"title": "", "count": 0, "quality_class": None})
            entry["quality_class"] = quality_class
            self._dirty = True

    def load_assessments(self, path: str | Path) -> int:
        """Apply a page-assessment sidecar: JSONL of {page_id, quality_class}."""
        count = 0
        with open(path, encoding="utf-8") as fp:
            for line_no, line in enumerate(fp, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    self.set_quality_class(int(obj["page_id"]), obj["quality_class"])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise StoreError(f"bad assessment record at line {line_no}: {exc}") from exc
                count += 1
        self.flush()
        return count

    # -- reads ------------------------------------------------------------------

    def _read_page(self, page_id: int) -> list[Revision]:
        path = self._page_path(page_id)
        if not path.exists():
            return []
        revisions: list[Revision] = []
        last_good: Optional[int] = None
        with path.open(encoding="utf-8") as fp:
            for line_no, line in enumerate(fp, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise StoreError(
                        f"corrupt record in page {page_id} at line {line_no}"
                        f" (last good rev_id: {last_good}): {exc.msg}"
                    ) from exc
                if line_no == 1:
                    if obj.get("magic") != PAGE_MAGIC or obj.get("page_id") != page_id:
                        raise StoreError(f"bad page header in {path}")
                    continue
                try:
                    rev = revision_from_json(obj)
                except (KeyError, TypeError, ValueError) as exc:
                    raise StoreError(
                        f"corrupt record in page {page_id} at line {line_no}"
                        f" (last good rev_id: {last_good}): {exc}"
                    ) from exc
                revisions.append(rev)
                last_good = rev.rev_id
        return revisions

    def scan(self, page_id: int) -> list[Revision]:
        """All revisions of a page in (timestamp, rev_id) order, deduplicated."""
        with self._lock:
            quality = self._pages.get(page_id, {}).get("quality_class")
        revisions = self._read_page(page_id)
        revisions.sort(key=lambda r: r.sort_key)
        seen: set[int] = set()
        out = []
        for rev in revisions:
            if rev.rev_id in seen:
                continue
            seen.add(rev.rev_id)
            if quality is not None and rev.quality_class is None:
                rev = replace(rev, quality_class=quality)
            out.append(rev)
        return out

    def page_ids(self) -> list[int]:
        with self._lock:
            return sorted(self._pages)

    def scan_all(self) -> Iterator[Revision]:
        for page_id in self.page_ids():
            yield from self.scan(page_id)

    def quality_class(self, page_id: int) -> Optional[str]:
        with self._lock:
            return self._pages.get(page_id, {}).get("quality_class")
