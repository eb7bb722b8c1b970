"""Browsing-session capture parsing and third-party request filtering.

Two capture formats are understood: HAR 1.2 and the line-delimited session
log written by :func:`write_session_log`. Each session log line is a JSON
object whose ``record`` field is ``"visit"`` or ``"request"``::

    {"record": "visit", "user": "u1", "index": 0, "url": "https://a.org/",
     "text": "...", "meta_keywords": ["..."]}
    {"record": "request", "user": "u1", "visit_index": 0,
     "url": "https://ads.net/p?kw=x", "kind": "xhr", "mime": null}
"""

from __future__ import annotations

import base64
import binascii
import json
import posixpath
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from functools import lru_cache
from html.parser import HTMLParser
from typing import Any, Iterable
from urllib.parse import parse_qsl, unquote, urlsplit

from .domains import registrable_domain
from .errors import EmptySessionError, SessionParseError


class ResourceKind(str, Enum):
    DOCUMENT = "document"
    SCRIPT = "script"
    STYLESHEET = "stylesheet"
    IMAGE = "image"
    FONT = "font"
    MEDIA = "media"
    XHR = "xhr"
    OTHER = "other"


DEFAULT_EXCLUDED_KINDS = frozenset(
    {ResourceKind.SCRIPT, ResourceKind.STYLESHEET, ResourceKind.IMAGE, ResourceKind.FONT}
)

RULE_ASSET_KIND = "asset_kind"
RULE_SAME_DOMAIN = "same_domain"


@dataclass(frozen=True)
class HttpRequestRecord:
    url: str
    resource_kind: ResourceKind = ResourceKind.OTHER
    response_mime: str | None = None


@dataclass(frozen=True)
class PageVisit:
    page_url: str
    visit_index: int
    page_text: str = ""
    meta_keywords: tuple[str, ...] = ()
    requests: tuple[HttpRequestRecord, ...] = ()


@dataclass(frozen=True)
class BrowsingSession:
    user_id: str
    visits: tuple[PageVisit, ...]

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if not self.visits:
            raise EmptySessionError()
        for i, visit in enumerate(self.visits):
            if visit.visit_index != i:
                raise ValueError(f"visit_index {visit.visit_index} at position {i}")


@dataclass(frozen=True)
class ThirdPartyRequest:
    origin_page: str
    tracker_domain: str
    full_host: str
    parameters: tuple[tuple[str, str], ...]
    url: str = ""


@dataclass
class FilterTally:
    """Where every input request went. ``emitted + excluded + unparseable == total``."""

    total: int = 0
    emitted: int = 0
    excluded: Counter = field(default_factory=Counter)
    unparseable: int = 0

    @property
    def excluded_total(self) -> int:
        return sum(self.excluded.values())

    def balanced(self) -> bool:
        return self.emitted + self.excluded_total + self.unparseable == self.total

    def merge(self, other: "FilterTally") -> None:
        self.total += other.total
        self.emitted += other.emitted
        self.excluded.update(other.excluded)
        self.unparseable += other.unparseable

    def as_dict(self) -> dict[str, int]:
        out = {"total": self.total, "emitted": self.emitted, "unparseable": self.unparseable}
        for rule in (RULE_ASSET_KIND, RULE_SAME_DOMAIN):
            out[f"excluded_{rule}"] = self.excluded.get(rule, 0)
        return out


# --- resource kind inference -------------------------------------------------

_EXTENSION_KINDS = {
    ResourceKind.SCRIPT: {".js", ".mjs", ".cjs", ".jsx"},
    ResourceKind.STYLESHEET: {".css"},
    ResourceKind.IMAGE: {".png", ".jpg", ".jpeg", ".gif", ".svg", ".webp", ".ico", ".bmp", ".avif", ".tif", ".tiff"},
    ResourceKind.FONT: {".woff", ".woff2", ".ttf", ".otf", ".eot"},
    ResourceKind.MEDIA: {".mp4", ".webm", ".ogg", ".ogv", ".mp3", ".wav", ".m4a", ".m3u8", ".mpd", ".flac"},
    ResourceKind.DOCUMENT: {".html", ".htm", ".xhtml"},
    ResourceKind.XHR: {".json"},
}
_EXT_TO_KIND = {ext: kind for kind, exts in _EXTENSION_KINDS.items() for ext in exts}


def kind_from_mime(mime: str | None) -> ResourceKind | None:
    if not mime:
        return None
    mime = mime.split(";", 1)[0].strip().lower()
    if not mime:
        return None
    major, _, minor = mime.partition("/")
    if mime in ("text/html", "application/xhtml+xml"):
        return ResourceKind.DOCUMENT
    if "javascript" in minor or "ecmascript" in minor:
        return ResourceKind.SCRIPT
    if mime == "text/css":
        return ResourceKind.STYLESHEET
    if major == "image":
        return ResourceKind.IMAGE
    if major == "font" or "font" in minor:
        return ResourceKind.FONT
    if major in ("audio", "video") or minor in ("vnd.apple.mpegurl", "x-mpegurl", "dash+xml"):
        return ResourceKind.MEDIA
    if minor in ("json", "xml") or minor.endswith("+json") or mime == "text/xml":
        return ResourceKind.XHR
    return None


def kind_from_url(url: str) -> ResourceKind | None:
    try:
        path = urlsplit(url).path
    except ValueError:
        return None
    # strip ;params before looking at the extension
    last = path.rsplit("/", 1)[-1].split(";", 1)[0]
    ext = posixpath.splitext(last)[1].lower()
    return _EXT_TO_KIND.get(ext)


def infer_resource_kind(url: str, mime: str | None) -> ResourceKind:
    """MIME type first, URL path extension second, ``other`` as fallback."""
    return kind_from_mime(mime) or kind_from_url(url) or ResourceKind.OTHER


# --- URL helpers ---------------------------------------------------------------

def url_host(url: str) -> str | None:
    """Host of an absolute URL, or ``None`` if the URL has no scheme or host."""
    try:
        parts = urlsplit(url)
        host = parts.hostname
    except ValueError:
        return None
    if not parts.scheme or not host:
        return None
    return host


def is_absolute_url(url: Any) -> bool:
    return isinstance(url, str) and url_host(url) is not None


def url_parameters(url: str) -> list[tuple[str, str]]:
    """Percent-decoded parameters from ``;k=v`` path segments then the query string."""
    parts = urlsplit(url)
    params: list[tuple[str, str]] = []
    for segment in parts.path.split("/"):
        if ";" not in segment:
            continue
        for item in segment.split(";")[1:]:
            if not item:
                continue
            key, _, value = item.partition("=")
            params.append((unquote(key), unquote(value)))
    params.extend(_query_params(parts.query))
    return params


@lru_cache(maxsize=8192)
def _query_params(query: str) -> tuple[tuple[str, str], ...]:
    return tuple(parse_qsl(query, keep_blank_values=True))


# --- filtering -----------------------------------------------------------------

def filter_requests(
    visit: PageVisit,
    excluded_kinds: Iterable[ResourceKind] = DEFAULT_EXCLUDED_KINDS,
) -> tuple[list[ThirdPartyRequest], FilterTally]:
    """Split a visit's requests into third-party requests and exclusions.

    Rules are applied in order and each excluded request is charged to the
    first rule that matches: asset kinds, then same registrable domain.
    Requests whose URL (or the page URL) has no usable host are tallied as
    unparseable.
    """
    excluded_kinds = frozenset(ResourceKind(k) for k in excluded_kinds)
    tally = FilterTally(total=len(visit.requests))
    out: list[ThirdPartyRequest] = []

    page_host = url_host(visit.page_url)
    try:
        page_domain = registrable_domain(page_host) if page_host else None
    except ValueError:
        page_domain = None

    for req in visit.requests:
        host = url_host(req.url)
        try:
            domain = registrable_domain(host) if host else None
            params = url_parameters(req.url) if domain else None
        except ValueError:
            domain = None
        if domain is None or page_domain is None:
            tally.unparseable += 1
            continue
        if req.resource_kind in excluded_kinds:
            tally.excluded[RULE_ASSET_KIND] += 1
            continue
        if domain == page_domain:
            tally.excluded[RULE_SAME_DOMAIN] += 1
            continue
        out.append(ThirdPartyRequest(
            origin_page=visit.page_url,
            tracker_domain=domain,
            full_host=host,
            parameters=tuple(params),
            url=req.url,
        ))
        tally.emitted += 1
    return out, tally


def extract_third_party_requests(
    visit: PageVisit,
    excluded_kinds: Iterable[ResourceKind] = DEFAULT_EXCLUDED_KINDS,
) -> list[ThirdPartyRequest]:
    return filter_requests(visit, excluded_kinds)[0]


def session_tally(session: BrowsingSession,
                  excluded_kinds: Iterable[ResourceKind] = DEFAULT_EXCLUDED_KINDS) -> FilterTally:
    total = FilterTally()
    for visit in session.visits:
        total.merge(filter_requests(visit, excluded_kinds)[1])
    return total


# --- HTML text extraction ------------------------------------------------------

class _TextExtractor(HTMLParser):
    _SKIP = {"script", "style", "noscript", "template", "svg"}
    _BLOCK = {"p", "div", "br", "li", "h1", "h2", "h3", "h4", "h5", "h6", "tr",
              "section", "article", "header", "footer", "title", "td", "th", "ul", "ol"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self.meta_keywords: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1
        elif tag == "meta":
            attrs = {k.lower(): (v or "") for k, v in attrs}
            if attrs.get("name", "").lower() == "keywords":
                self.meta_keywords.extend(attrs.get("content", "").split(","))
        if tag in self._BLOCK:
            self.chunks.append("\n")

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth:
            self._skip_depth -= 1
        elif tag in self._BLOCK:
            self.chunks.append("\n")

    def handle_data(self, data):
        if not self._skip_depth:
            self.chunks.append(data)


def html_to_text(html: str) -> tuple[str, list[str]]:
    """Visible text and ``<meta name="keywords">`` entries of an HTML document."""
    parser = _TextExtractor()
    parser.feed(html)
    parser.close()
    lines = (" ".join(line.split()) for line in "".join(parser.chunks).splitlines())
    return "\n".join(line for line in lines if line), parser.meta_keywords


# --- HAR -----------------------------------------------------------------------

def _decode_json(data: bytes) -> Any:
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise SessionParseError(f"invalid UTF-8: {exc.reason}", offset=exc.start) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        if data.startswith(b"\xef\xbb\xbf"):
            offset += 3
        raise SessionParseError(f"malformed JSON: {exc.msg}", offset=offset) from exc


def _require(obj: Any, key: str, typ: type | tuple[type, ...], path: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise SessionParseError(f"missing field {key!r}", path=path)
    value = obj[key]
    if not isinstance(value, typ):
        raise SessionParseError(f"field {key!r} has wrong type", path=f"{path}.{key}")
    return value


def _parse_time(value: Any, path: str) -> datetime:
    if not isinstance(value, str):
        raise SessionParseError("startedDateTime must be a string", path=path)
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        return datetime.fromisoformat(text)
    except ValueError as exc:
        raise SessionParseError(f"bad timestamp {value!r}", path=path) from exc


def _entry_body(entry: dict) -> str | None:
    content = (entry.get("response") or {}).get("content") or {}
    text = content.get("text")
    if not isinstance(text, str):
        return None
    if content.get("encoding") == "base64":
        try:
            return base64.b64decode(text).decode("utf-8", errors="replace")
        except (binascii.Error, ValueError):
            return None
    return text


def parse_har(data: bytes, user_id: str = "har-user") -> BrowsingSession:
    """Parse a HAR 1.2 capture into a session, one visit per HAR page."""
    doc = _decode_json(data)
    log = _require(doc, "log", dict, "$")
    pages = log.get("pages") or []
    if not isinstance(pages, list):
        raise SessionParseError("pages must be a list", path="log.pages")
    if not pages:
        raise EmptySessionError(path="log.pages")
    entries = _require(log, "entries", list, "log")

    page_meta = []
    ids: dict[str, int] = {}
    for i, page in enumerate(pages):
        path = f"log.pages[{i}]"
        pid = _require(page, "id", str, path)
        if pid in ids:
            raise SessionParseError(f"duplicate page id {pid!r}", path=f"{path}.id")
        started = _parse_time(_require(page, "startedDateTime", str, path), f"{path}.startedDateTime")
        ids[pid] = i
        page_meta.append((started, i, pid, page.get("title")))

    grouped: dict[str, list[tuple[HttpRequestRecord, dict]]] = {pid: [] for pid in ids}
    for j, entry in enumerate(entries):
        path = f"log.entries[{j}]"
        if not isinstance(entry, dict):
            raise SessionParseError("entry must be an object", path=path)
        ref = entry.get("pageref")
        if ref is None and len(pages) == 1:
            ref = pages[0]["id"]
        if ref not in grouped:
            raise SessionParseError(f"unknown pageref {ref!r}", path=f"{path}.pageref")
        request = _require(entry, "request", dict, path)
        url = _require(request, "url", str, f"{path}.request")
        content = (entry.get("response") or {}).get("content") or {}
        mime = content.get("mimeType") if isinstance(content.get("mimeType"), str) else None
        if mime is not None and not mime.strip():
            mime = None
        record = HttpRequestRecord(url=url, resource_kind=infer_resource_kind(url, mime), response_mime=mime)
        grouped[ref].append((record, entry))

    page_meta.sort(key=lambda m: (m[0], m[1]))
    visits = []
    for index, (_, _, pid, title) in enumerate(page_meta):
        reqs = grouped[pid]
        docs = [(r, e) for r, e in reqs if r.resource_kind is ResourceKind.DOCUMENT]
        if is_absolute_url(title):
            page_url = title
        elif docs:
            page_url = docs[0][0].url
        elif reqs:
            page_url = reqs[0][0].url
        else:
            raise SessionParseError("cannot determine page URL", path=f"log.pages[{ids[pid]}]")

        main = next((e for r, e in docs if r.url == page_url), docs[0][1] if docs else None)
        text, meta = "", []
        body = _entry_body(main) if main is not None else None
        if body:
            mime = (main["response"].get("content") or {}).get("mimeType") or ""
            if "html" in mime.lower() or kind_from_mime(mime) is None and "<" in body:
                text, meta = html_to_text(body)
            else:
                text = body
        visits.append(PageVisit(
            page_url=page_url,
            visit_index=index,
            page_text=text,
            meta_keywords=tuple(meta),
            requests=tuple(r for r, _ in reqs),
        ))
    return BrowsingSession(user_id=user_id, visits=tuple(visits))


# --- session log ---------------------------------------------------------------

_VISIT_FIELDS = {"user": str, "index": int, "url": str, "text": str, "meta_keywords": list}
_REQUEST_FIELDS = {"user": str, "visit_index": int, "url": str, "kind": (str, type(None)), "mime": (str, type(None))}


def _check_fields(rec: dict, spec: dict, lineno: int) -> None:
    for name, typ in spec.items():
        if name not in rec:
            raise SessionParseError(f"missing field {name!r}", line=lineno)
        value = rec[name]
        if isinstance(value, bool) or not isinstance(value, typ):
            raise SessionParseError(f"field {name!r} has wrong type", line=lineno)


def parse_session_logs(data: bytes) -> list[BrowsingSession]:
    """Parse a session log that may interleave several users, in first-seen order."""
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise SessionParseError(f"invalid UTF-8: {exc.reason}", offset=exc.start) from exc

    visits: dict[str, dict[int, dict]] = {}
    requests: dict[str, list[tuple[int, int, HttpRequestRecord]]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SessionParseError(f"malformed JSON: {exc.msg}", line=lineno) from exc
        if not isinstance(rec, dict):
            raise SessionParseError("record must be an object", line=lineno)
        kind = rec.get("record")
        if kind == "visit":
            _check_fields(rec, _VISIT_FIELDS, lineno)
            if not rec["user"]:
                raise SessionParseError("empty user", line=lineno)
            if not is_absolute_url(rec["url"]):
                raise SessionParseError(f"not an absolute URL: {rec['url']!r}", line=lineno)
            if not all(isinstance(k, str) for k in rec["meta_keywords"]):
                raise SessionParseError("meta_keywords must be strings", line=lineno)
            user_visits = visits.setdefault(rec["user"], {})
            requests.setdefault(rec["user"], [])
            if rec["index"] in user_visits:
                raise SessionParseError(f"duplicate visit index {rec['index']}", line=lineno)
            user_visits[rec["index"]] = dict(rec, _line=lineno)
        elif kind == "request":
            _check_fields(rec, _REQUEST_FIELDS, lineno)
            # unusable request URLs are kept; the third-party filter tallies them
            if rec["kind"] is None:
                rk = infer_resource_kind(rec["url"], rec["mime"])
            else:
                try:
                    rk = ResourceKind(rec["kind"])
                except ValueError:
                    raise SessionParseError(f"unknown kind {rec['kind']!r}", line=lineno) from None
            requests.setdefault(rec["user"], []).append(
                (lineno, rec["visit_index"], HttpRequestRecord(rec["url"], rk, rec["mime"]))
            )
        else:
            raise SessionParseError(f"unknown record type {kind!r}", line=lineno)

    if not visits:
        raise EmptySessionError()
    sessions = []
    for user, recs in requests.items():
        if user not in visits:
            raise SessionParseError(f"requests for user {user!r} without visits", line=recs[0][0])
    for user, user_visits in visits.items():
        for expected, index in enumerate(sorted(user_visits)):
            if index != expected:
                raise SessionParseError(
                    f"visit indices for {user!r} not consecutive from 0",
                    line=user_visits[index]["_line"],
                )
        by_visit: dict[int, list[HttpRequestRecord]] = {i: [] for i in user_visits}
        for lineno, vi, req in requests[user]:
            if vi not in by_visit:
                raise SessionParseError(f"request for unknown visit {vi}", line=lineno)
            by_visit[vi].append(req)
        sessions.append(BrowsingSession(user_id=user, visits=tuple(
            PageVisit(
                page_url=user_visits[i]["url"],
                visit_index=i,
                page_text=user_visits[i]["text"],
                meta_keywords=tuple(user_visits[i]["meta_keywords"]),
                requests=tuple(by_visit[i]),
            )
            for i in sorted(user_visits)
        )))
    return sessions


def parse_session_log(data: bytes) -> BrowsingSession:
    """Parse a single-user session log."""
    sessions = parse_session_logs(data)
    if len(sessions) > 1:
        raise SessionParseError(
            f"expected one user, found {len(sessions)}: " + ", ".join(s.user_id for s in sessions)
        )
    return sessions[0]


def write_session_log(session: BrowsingSession) -> bytes:
    """Serialize a session to the session-log format; byte-stable for equal sessions."""
    lines = []
    for visit in session.visits:
        lines.append({
            "record": "visit", "user": session.user_id, "index": visit.visit_index,
            "url": visit.page_url, "text": visit.page_text,
            "meta_keywords": list(visit.meta_keywords),
        })
        for req in visit.requests:
            lines.append({
                "record": "request", "user": session.user_id, "visit_index": visit.visit_index,
                "url": req.url, "kind": req.resource_kind.value, "mime": req.response_mime,
            })
    return "".join(
        json.dumps(line, ensure_ascii=False, separators=(",", ":")) + "\n" for line in lines
    ).encode("utf-8")
