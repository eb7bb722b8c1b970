"""RAKE keyword extraction and meta-keyword normalization.

Tokenization is locale independent: text is lowercased, cut into fragments
at the delimiter characters ``. , ; : ! ? ( ) [ ] " '`` and at line breaks,
and each fragment is split on Unicode whitespace. Stopwords, digits-only
tokens and tokens without any alphanumeric character all end the current
candidate phrase and are never part of one.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Iterable

DELIMITERS = ".,;:!?()[]\"'"
_FRAGMENT_RE = re.compile("[" + re.escape(DELIMITERS) + "\r\n\x0b\x0c\x1c-\x1e\x85\u2028\u2029]+")

DEFAULT_MAX_PHRASE_LEN = 3


@dataclass(frozen=True)
class ScoredKeyword:
    phrase: str
    score: float


class StopwordList:
    def __init__(self, words: Iterable[str]):
        self.words = frozenset(w.strip().lower() for w in words if w.strip())

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def from_text(cls, text: str) -> "StopwordList":
        return cls(line for line in text.splitlines() if not line.lstrip().startswith("#"))

    @classmethod
    def bundled(cls) -> "StopwordList":
        return _bundled_stopwords()


@lru_cache(maxsize=1)
def _bundled_stopwords() -> StopwordList:
    text = resources.files("footprint").joinpath("data/stopwords.txt").read_text("utf-8")
    return StopwordList.from_text(text)


def _is_breaker(token: str, stopwords: StopwordList) -> bool:
    return token in stopwords or token.isdigit() or not any(ch.isalnum() for ch in token)


def candidate_phrases(text: str, stopwords: StopwordList, max_phrase_len: int) -> list[tuple[str, ...]]:
    """Candidate phrases in text order, each a tuple of words, with repeats."""
    candidates = []
    for fragment in _FRAGMENT_RE.split(text.lower()):
        run: list[str] = []
        for token in fragment.split() + [""]:
            if token and not _is_breaker(token, stopwords):
                run.append(token)
                continue
            if run:
                candidates.append(tuple(run[:max_phrase_len]))
                run = []
    return candidates


def rake_extract(text: str, stopwords: StopwordList | None = None,
                 max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN) -> list[ScoredKeyword]:
    """Score candidate phrases by summed word degree/frequency, best first.

    Word scores are kept as exact fractions and only the phrase totals are
    converted to float, so equal phrases always score identically.
    """
    if max_phrase_len < 1:
        raise ValueError("max_phrase_len must be positive")
    if stopwords is None:
        stopwords = StopwordList.bundled()
    candidates = candidate_phrases(text, stopwords, max_phrase_len)

    freq: dict[str, int] = {}
    degree: dict[str, int] = {}
    for phrase in candidates:
        for word in phrase:
            freq[word] = freq.get(word, 0) + 1
            degree[word] = degree.get(word, 0) + len(phrase)

    scores: dict[str, Fraction] = {}
    for phrase in candidates:
        key = " ".join(phrase)
        if key not in scores:
            scores[key] = sum((Fraction(degree[w], freq[w]) for w in phrase), Fraction(0))
    # dicts keep first-occurrence order and sorted() is stable
    ranked = sorted(scores.items(), key=lambda kv: kv[1], reverse=True)
    return [ScoredKeyword(phrase, float(score)) for phrase, score in ranked]


def top_keywords(keywords: list[ScoredKeyword], fraction: float = 1 / 3) -> list[ScoredKeyword]:
    """Keep the best ``ceil(C * fraction)`` of ``C`` extracted phrases."""
    if not keywords:
        return []
    return keywords[: math.ceil(len(keywords) * fraction)]


def collect_meta_keywords(visit) -> list[str]:
    """Lowercased, trimmed meta keywords; empties dropped, duplicates kept."""
    out = []
    for kw in visit.meta_keywords:
        kw = kw.strip().lower()
        if kw:
            out.append(kw)
    return out
