from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from cohortnet.netbuild import CoauthGraph  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("COHORTNET_NETWORK") == "1":
        return
    skip = pytest.mark.skip(reason="set COHORTNET_NETWORK=1 to run live OpenAlex checks")
    for item in items:
        if "network" in item.keywords:
            item.add_marker(skip)


def graph_from(n: int, edges) -> CoauthGraph:
    """Graph on nodes v00..v{n-1} from integer edges."""
    names = [f"v{i:02d}" for i in range(n)]
    return CoauthGraph(nodes=names, edges=[(names[i], names[j]) for i, j in edges])


def node_name(i: int) -> str:
    return f"v{i:02d}"


class FakeResponse:
    def __init__(self, status_code=200, payload=None, headers=None, bad_json=False):
        self.status_code = status_code
        self._payload = payload
        self.headers = headers or {}
        self._bad_json = bad_json

    def json(self):
        if self._bad_json:
            raise json.JSONDecodeError("bad", "", 0)
        return self._payload


class FakeOpenAlex:
    """In-memory works endpoint paging ``records`` with offset cursors."""

    def __init__(self, records, page_size=200, script=None):
        self.records = records
        self.page_size = page_size
        self.script = list(script or [])
        self.calls: list[dict] = []

    def get(self, url, params=None, timeout=None):
        self.calls.append({"url": url, **(params or {})})
        if self.script:
            item = self.script.pop(0)
            if isinstance(item, Exception):
                raise item
            if item is not None:
                return item
        if url.endswith("/institutions"):
            return FakeResponse(200, {"results": [{"id": "https://openalex.org/I27837315"}]})
        cursor = params["cursor"]
        start = 0 if cursor == "*" else int(cursor)
        page = self.records[start:start + self.page_size]
        nxt = start + len(page)
        meta = {"count": len(self.records), "next_cursor": str(nxt) if page else None}
        return FakeResponse(200, {"results": page, "meta": meta})


@pytest.fixture
def no_sleep():
    slept = []
    return slept, slept.append


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
