"""Client for pulling revision histories from a live MediaWiki API."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

import requests

from .revisions import Revision, parse_timestamp, sha1_of
from .store import RevisionStore


class FetchError(Exception):
    pass


@dataclass
class FetchReport:
    fetched: dict[str, int] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)


def _revision_from_api(obj: dict, page_id: int, title: str) -> Revision:
    text = obj.get("*")
    if text is None:
        text = obj.get("slots", {}).get("main", {}).get("*")
    if text is None:
        text = obj.get("content", "")
    sha1 = obj.get("sha1") or sha1_of(text)
    return Revision(
        rev_id=int(obj["revid"]),
        page_id=page_id,
        parent_id=int(obj["parentid"]) if obj.get("parentid") else None,
        timestamp=parse_timestamp(obj["timestamp"]),
        comment=obj.get("comment", ""),
        sha1=sha1,
        text=text,
        page_title=title,
    )


def _get_with_retry(
    session: requests.Session,
    url: str,
    params: dict,
    max_retries: int,
    backoff: float,
    sleep: Callable[[float], None],
) -> dict:
    delay = backoff
    last_error: Optional[Exception] = None
    for attempt in range(max_retries + 1):
        try:
            resp = session.get(url, params=params, timeout=30)
            if resp.status_code >= 500:
                raise FetchError(f"server error {resp.status_code}")
            if resp.status_code != 200:
                raise FetchError(f"unexpected status {resp.status_code}")
            return resp.json()
        except (requests.ConnectionError, requests.Timeout, FetchError, ValueError) as exc:
            last_error = exc
            if attempt == max_retries:
                break
            sleep(delay)
            delay *= 2
    raise FetchError(f"request failed after {max_retries + 1} attempts: {last_error}")


def fetch_revisions(
    api_url: str,
    page_titles: Iterable[str],
    limit_per_page: int = 50,
    *,
    store: Optional[RevisionStore] = None,
    session: Optional[requests.Session] = None,
    max_retries: int = 3,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
    report: Optional[FetchReport] = None,
    polite_delay: float = 0.0,
) -> Iterator[Revision]:
    """Fetch up to ``limit_per_page`` revisions per title, oldest first.

    Per-title failures (unknown title, exhausted retries) are recorded in the
    report and the remaining titles are still fetched.  When a store is given
    every revision is persisted; the store deduplicates by rev_id, so a
    repeated fetch leaves it unchanged.
    """
    own_session = session is None
    session = session or requests.Session()
    report = report if report is not None else FetchReport()
    try:
        for title in page_titles:
            fetched = 0
            cont: dict = {}
            try:
                while fetched < limit_per_page:
                    params = {
                        "action": "query",
                        "format": "json",
                        "prop": "revisions",
                        "titles": title,
                        "rvprop": "ids|timestamp|comment|sha1|content",
                        "rvdir": "newer",
                        "rvlimit": min(limit_per_page - fetched, 500),
                        **cont,
                    }
                    data = _get_with_retry(session, api_url, params, max_retries, backoff, sleep)
                    pages = data.get("query", {}).get("pages", {})
                    if not pages:
                        raise FetchError("no pages in response")
                    page = next(iter(pages.values()))
                    if "missing" in page:
                        raise FetchError(f"unknown title {title!r}")
                    page_id = int(page["pageid"])
                    for obj in page.get("revisions", []):
                        rev = _revision_from_api(obj, page_id, page.get("title", title))
                        if store is not None:
                            store.put(rev)
                        fetched += 1
                        yield rev
                        if fetched >= limit_per_page:
                            break
                    cont = data.get("continue", {})
                    if not cont:
                        break
                    if polite_delay:
                        sleep(polite_delay)
                report.fetched[title] = fetched
            except FetchError as exc:
                report.errors[title] = str(exc)
            if polite_delay:
                sleep(polite_delay)
        if store is not None:
            store.flush()
    finally:
        if own_session:
            session.close()
