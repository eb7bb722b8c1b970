"""Top-level interest categories and keyword classification.

Taxonomy files are UTF-8 text. ``#`` starts a comment line, ``[name]``
declares the next category (declaration order is category order), and every
other non-empty line is a term belonging to the most recently declared
category. A line of the form ``term -> category`` (``→`` also accepted)
assigns a term to an already declared category explicitly.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Mapping

from .errors import TaxonomyError

_ARROW_RE = re.compile(r"\s*(?:->|→)\s*")


def normalize_term(term: str) -> str:
    return " ".join(term.lower().split())


@dataclass(frozen=True, eq=False)
class CategoryTaxonomy:
    categories: tuple[str, ...]
    lexicon: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.categories) < 2:
            raise TaxonomyError("a taxonomy needs at least two categories")
        if len(set(self.categories)) != len(self.categories):
            raise TaxonomyError("category names must be unique")
        for term, index in self.lexicon.items():
            if not 0 <= index < len(self.categories):
                raise TaxonomyError(f"term {term!r} mapped to invalid category index {index}")
        object.__setattr__(self, "lexicon", MappingProxyType(dict(self.lexicon)))

    @property
    def size(self) -> int:
        return len(self.categories)

    def index(self, name: str) -> int:
        try:
            return self.categories.index(name)
        except ValueError:
            raise TaxonomyError(f"unknown category {name!r}") from None

    def terms_by_category(self) -> list[list[str]]:
        """Lexicon terms grouped per category, each group sorted."""
        groups: list[list[str]] = [[] for _ in self.categories]
        for term, index in self.lexicon.items():
            groups[index].append(term)
        return [sorted(g) for g in groups]

    @classmethod
    def bundled(cls) -> "CategoryTaxonomy":
        return _bundled_taxonomy()


def load_taxonomy(data: bytes | str) -> CategoryTaxonomy:
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    categories: list[str] = []
    lexicon: dict[str, int] = {}
    current: int | None = None

    def assign(term: str, index: int, lineno: int) -> None:
        term = normalize_term(term)
        if not term:
            return
        if lexicon.get(term, index) != index:
            raise TaxonomyError(
                f"line {lineno}: term {term!r} already belongs to {categories[lexicon[term]]!r}"
            )
        lexicon[term] = index

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = normalize_term(line[1:-1])
            if not name:
                raise TaxonomyError(f"line {lineno}: empty category name")
            if name in categories:
                raise TaxonomyError(f"line {lineno}: duplicate category {name!r}")
            categories.append(name)
            current = len(categories) - 1
            continue
        parts = _ARROW_RE.split(line, maxsplit=1)
        if len(parts) == 2:
            term, target = parts
            target = normalize_term(target)
            if target not in categories:
                raise TaxonomyError(f"line {lineno}: term {normalize_term(term)!r} mapped to unknown category {target!r}")
            assign(term, categories.index(target), lineno)
        elif current is None:
            raise TaxonomyError(f"line {lineno}: term {normalize_term(line)!r} appears before any category")
        else:
            assign(line, current, lineno)
    return CategoryTaxonomy(tuple(categories), lexicon)


@lru_cache(maxsize=1)
def _bundled_taxonomy() -> CategoryTaxonomy:
    return load_taxonomy(resources.files("footprint").joinpath("data/taxonomy.txt").read_bytes())


@lru_cache(maxsize=65536)
def classify(term: str, taxonomy: CategoryTaxonomy) -> int | None:
    """Category index for ``term``, or ``None`` when nothing matches.

    Exact lookup of the normalized term wins. Otherwise each word of a
    multi-word term is looked up and the category with the most word hits is
    returned, ties going to the lowest category index.
    """
    key = normalize_term(term)
    if not key:
        return None
    hit = taxonomy.lexicon.get(key)
    if hit is not None:
        return hit
    words = key.split()
    if len(words) < 2:
        return None
    votes = Counter(taxonomy.lexicon[w] for w in words if w in taxonomy.lexicon)
    if not votes:
        return None
    best = max(votes.values())
    return min(index for index, n in votes.items() if n == best)
