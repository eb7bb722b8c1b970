from pathlib import Path

import pytest

from footprint.ingest import BrowsingSession, HttpRequestRecord, PageVisit, ResourceKind
from footprint.taxonomy import load_taxonomy

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


def visit(url, requests=(), index=0, text="", meta=()):
    reqs = tuple(
        r if isinstance(r, HttpRequestRecord) else HttpRequestRecord(r[0], ResourceKind(r[1]))
        for r in requests
    )
    return PageVisit(page_url=url, visit_index=index, page_text=text, meta_keywords=tuple(meta), requests=reqs)


def session(user, *visits):
    return BrowsingSession(user, tuple(
        PageVisit(v.page_url, i, v.page_text, v.meta_keywords, v.requests) for i, v in enumerate(visits)
    ))


@pytest.fixture
def small_taxonomy():
    return load_taxonomy("[arts]\nwine\nmusic\n[sports]\nfootball\ntennis\n")


@pytest.fixture
def har_fixture():
    return (DATA / "filter_fixture.har").read_bytes()
