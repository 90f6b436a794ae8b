import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from editintent.client import FetchReport, fetch_revisions
from editintent.revisions import sha1_of
from editintent.store import RevisionStore

PAGE_DATA = {
    "Alpha": {
        "pageid": 11,
        "revisions": [
            {
                "revid": 100,
                "parentid": 0,
                "timestamp": "2020-01-01T00:00:00Z",
                "comment": "start",
                "sha1": sha1_of("alpha v1"),
                "*": "alpha v1",
            },
            {
                "revid": 101,
                "parentid": 100,
                "timestamp": "2020-01-02T00:00:00Z",
                "comment": "more",
                "sha1": sha1_of("alpha v2"),
                "*": "alpha v2",
            },
        ],
    }
}


class MockWikiHandler(BaseHTTPRequestHandler):
    fail_next = 0

    def do_GET(self):
        cls = type(self)
        if cls.fail_next > 0:
            cls.fail_next -= 1
            self.send_response(503)
            self.end_headers()
            return
        params = parse_qs(urlparse(self.path).query)
        title = params.get("titles", [""])[0]
        limit = int(params.get("rvlimit", ["50"])[0])
        if title in PAGE_DATA:
            page = dict(PAGE_DATA[title])
            page = {
                "pageid": page["pageid"],
                "title": title,
                "revisions": page["revisions"][:limit],
            }
            body = {"query": {"pages": {str(page["pageid"]): page}}}
        else:
            body = {"query": {"pages": {"-1": {"title": title, "missing": ""}}}}
        payload = json.dumps(body).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def mock_api():
    server = HTTPServer(("127.0.0.1", 0), MockWikiHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    MockWikiHandler.fail_next = 0
    yield f"http://127.0.0.1:{server.server_port}/api.php"
    server.shutdown()


class TestFetch:
    def test_two_revisions_stored(self, mock_api, tmp_path):
        store = RevisionStore(tmp_path / "s")
        revs = list(fetch_revisions(mock_api, ["Alpha"], store=store))
        assert [r.rev_id for r in revs] == [100, 101]
        assert [r.rev_id for r in store.scan(11)] == [100, 101]
        assert revs[0].page_title == "Alpha"

    def test_refetch_idempotent(self, mock_api, tmp_path):
        store = RevisionStore(tmp_path / "s")
        list(fetch_revisions(mock_api, ["Alpha"], store=store))
        list(fetch_revisions(mock_api, ["Alpha"], store=store))
        assert len(store.scan(11)) == 2

    def test_unknown_title_recorded_others_fetched(self, mock_api, tmp_path):
        store = RevisionStore(tmp_path / "s")
        report = FetchReport()
        revs = list(fetch_revisions(mock_api, ["Missing page", "Alpha"], store=store, report=report))
        assert "Missing page" in report.errors
        assert report.fetched == {"Alpha": 2}
        assert len(revs) == 2

    def test_retry_then_success(self, mock_api):
        MockWikiHandler.fail_next = 2
        sleeps = []
        revs = list(
            fetch_revisions(mock_api, ["Alpha"], max_retries=3, backoff=0.01, sleep=sleeps.append)
        )
        assert len(revs) == 2
        assert len(sleeps) == 2

    def test_retries_exhausted_is_per_title_error(self, mock_api):
        MockWikiHandler.fail_next = 10
        report = FetchReport()
        revs = list(
            fetch_revisions(
                mock_api, ["Alpha"], max_retries=2, backoff=0.0, sleep=lambda s: None, report=report
            )
        )
        assert revs == []
        assert "Alpha" in report.errors

    def test_limit_respected(self, mock_api):
        revs = list(fetch_revisions(mock_api, ["Alpha"], limit_per_page=1))
        assert [r.rev_id for r in revs] == [100]
