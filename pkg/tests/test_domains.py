import re

import pytest
from hypothesis import given, strategies as st

from footprint.domains import PublicSuffixTable, registrable_domain

from conftest import DATA

_CHECK = re.compile(r"^checkPublicSuffix\((null|'[^']*'), (null|'[^']*')\);")


def _psl_vectors():
    for line in (DATA / "psl_test_vectors.txt").read_text("utf-8").splitlines():
        m = _CHECK.match(line)
        if not m:
            continue
        host, expected = (None if g == "null" else g.strip("'") for g in m.groups())
        yield host, expected


PSL_VECTORS = [(h, e) for h, e in _psl_vectors() if h is not None and e is not None]


def test_vectors_loaded():
    assert len(PSL_VECTORS) > 40


@pytest.mark.parametrize("host,expected", PSL_VECTORS)
def test_published_suffix_vectors(host, expected):
    # the published vectors with a registrable answer
    assert registrable_domain(host) == expected.lower()


@pytest.mark.parametrize("host,expected", [
    ("bid.g.doubleclick.net", "doubleclick.net"),
    ("example.org", "example.org"),
    ("192.168.0.1", "192.168.0.1"),
    ("[::1]", "[::1]"),
    ("www.bbc.co.uk", "bbc.co.uk"),
    ("a.b.unknowntld-xyz", "b.unknowntld-xyz"),
    ("Tacoda.AT.atwola.com.", "atwola.com"),
    ("co.uk", "co.uk"),
])
def test_examples(host, expected):
    assert registrable_domain(host) == expected


@pytest.mark.parametrize("host", ["", "   ", ".", "a..b.com"])
def test_bad_host(host):
    with pytest.raises(ValueError):
        registrable_domain(host)


def test_custom_table_wildcard_and_exception():
    table = PublicSuffixTable("// c\n*.ck\n!www.ck\nuk\nco.uk\n")
    assert table.registrable_domain("a.b.c.ck") == "b.c.ck"
    assert table.registrable_domain("www.ck") == "www.ck"
    assert table.registrable_domain("x.www.ck") == "www.ck"
    assert table.registrable_domain("x.y.co.uk") == "y.co.uk"


label = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789-", min_size=1, max_size=10)
suffix = st.sampled_from(["com", "co.uk", "net", "jp", "kyoto.jp", "github.io", "mm", "zz", "ck", "appspot.com"])


@given(st.lists(label, min_size=1, max_size=4), suffix)
def test_idempotent(labels, sfx):
    host = ".".join(labels + [sfx])
    once = registrable_domain(host)
    assert registrable_domain(once) == once
    assert host.endswith(once)
