"""Per-category tag counting and PMF interest profiles.

The user profile of a session counts classified page keywords (the top RAKE
phrases plus meta keywords); the advertising profile counts classified URL
parameters of the third-party requests. Both are cumulative over the visits
seen so far unless the per-visit window is requested for the ad side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyProfileError
from .ingest import (
    DEFAULT_EXCLUDED_KINDS,
    BrowsingSession,
    PageVisit,
    ResourceKind,
    ThirdPartyRequest,
    extract_third_party_requests,
)
from .keywords import (
    DEFAULT_MAX_PHRASE_LEN,
    StopwordList,
    collect_meta_keywords,
    rake_extract,
    top_keywords,
)
from .taxonomy import CategoryTaxonomy, classify, normalize_term

WINDOW_CUMULATIVE = "cumulative"
WINDOW_PER_VISIT = "per-visit"


@dataclass(frozen=True)
class InterestProfile:
    counts: tuple[int, ...]

    @classmethod
    def empty(cls, size: int) -> "InterestProfile":
        return cls((0,) * size)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __add__(self, other: "InterestProfile") -> "InterestProfile":
        if len(self.counts) != len(other.counts):
            raise ValueError("profiles over different category sets")
        return InterestProfile(tuple(a + b for a, b in zip(self.counts, other.counts)))


@dataclass(frozen=True)
class ProfilePMF:
    mass: tuple[float, ...]

    def __post_init__(self):
        if any(m < 0 for m in self.mass):
            raise ValueError("negative mass")
        if abs(math.fsum(self.mass) - 1.0) > 1e-9:
            raise ValueError(f"mass sums to {math.fsum(self.mass)}, not 1")

    def __len__(self) -> int:
        return len(self.mass)


def add_tags(profile: InterestProfile, categories: Iterable[int]) -> InterestProfile:
    counts = list(profile.counts)
    for c in categories:
        if not 0 <= c < len(counts):
            raise ValueError(f"category index {c} out of range")
        counts[c] += 1
    return InterestProfile(tuple(counts))


def normalize(profile: InterestProfile) -> ProfilePMF:
    total = profile.total
    if total == 0:
        raise EmptyProfileError("cannot normalize an empty profile")
    return ProfilePMF(tuple(c / total for c in profile.counts))


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything the profile builders need besides the session itself."""

    taxonomy: CategoryTaxonomy = field(default_factory=CategoryTaxonomy.bundled)
    stopwords: StopwordList = field(default_factory=StopwordList.bundled)
    max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN
    keyword_fraction: float = 1 / 3
    excluded_kinds: frozenset[ResourceKind] = DEFAULT_EXCLUDED_KINDS
    window: str = WINDOW_CUMULATIVE

    def __post_init__(self):
        if self.window not in (WINDOW_CUMULATIVE, WINDOW_PER_VISIT):
            raise ValueError(f"unknown window {self.window!r}")
        if self.max_phrase_len < 1:
            raise ValueError("max_phrase_len must be positive")


@dataclass
class TagStats:
    """Classified vs. dropped term counts, kept as diagnostics."""

    classified: int = 0
    unclassified: int = 0


def page_terms(visit: PageVisit, config: AnalysisConfig) -> list[str]:
    """Top RAKE phrases of the page text followed by its meta keywords."""
    ranked = rake_extract(visit.page_text, config.stopwords, config.max_phrase_len)
    terms = [kw.phrase for kw in top_keywords(ranked, config.keyword_fraction)]
    return terms + collect_meta_keywords(visit)


def parameter_terms(request: ThirdPartyRequest, taxonomy: CategoryTaxonomy) -> list[str]:
    """Every parameter value, plus keys that are themselves lexicon terms."""
    terms = []
    for key, value in request.parameters:
        if normalize_term(key) in taxonomy.lexicon:
            terms.append(key)
        terms.append(value)
    return terms


def _classify_all(terms: Sequence[str], taxonomy: CategoryTaxonomy,
                  stats: TagStats | None) -> list[int]:
    tags = []
    for term in terms:
        c = classify(term, taxonomy)
        if c is None:
            if stats is not None and normalize_term(term):
                stats.unclassified += 1
            continue
        tags.append(c)
    if stats is not None:
        stats.classified += len(tags)
    return tags


def visit_user_tags(visit: PageVisit, config: AnalysisConfig, stats: TagStats | None = None) -> list[int]:
    return _classify_all(page_terms(visit, config), config.taxonomy, stats)


def visit_ad_tags(visit: PageVisit, config: AnalysisConfig, stats: TagStats | None = None) -> list[int]:
    terms = []
    for req in extract_third_party_requests(visit, config.excluded_kinds):
        terms.extend(parameter_terms(req, config.taxonomy))
    return _classify_all(terms, config.taxonomy, stats)


def _check_index(session: BrowsingSession, visit_index: int) -> None:
    if not 0 <= visit_index < len(session.visits):
        raise IndexError(f"visit_index {visit_index} outside 0..{len(session.visits) - 1}")


def user_profile_upto(session: BrowsingSession, visit_index: int,
                      config: AnalysisConfig) -> InterestProfile:
    _check_index(session, visit_index)
    profile = InterestProfile.empty(config.taxonomy.size)
    for visit in session.visits[: visit_index + 1]:
        profile = add_tags(profile, visit_user_tags(visit, config))
    return profile


def ad_profile_upto(session: BrowsingSession, visit_index: int,
                    config: AnalysisConfig) -> InterestProfile:
    _check_index(session, visit_index)
    first = visit_index if config.window == WINDOW_PER_VISIT else 0
    profile = InterestProfile.empty(config.taxonomy.size)
    for visit in session.visits[first: visit_index + 1]:
        profile = add_tags(profile, visit_ad_tags(visit, config))
    return profile


@dataclass
class SessionProfiles:
    """User and ad profiles at every visit of one session."""

    user_id: str
    user: list[InterestProfile]
    ad: list[InterestProfile]
    user_stats: TagStats
    ad_stats: TagStats


def session_profiles(session: BrowsingSession, config: AnalysisConfig) -> SessionProfiles:
    """All prefix profiles in one pass; same result as the ``*_upto`` functions."""
    L = config.taxonomy.size
    user_stats, ad_stats = TagStats(), TagStats()
    user = InterestProfile.empty(L)
    ad = InterestProfile.empty(L)
    users, ads = [], []
    for visit in session.visits:
        user = add_tags(user, visit_user_tags(visit, config, user_stats))
        ad_visit = add_tags(InterestProfile.empty(L), visit_ad_tags(visit, config, ad_stats))
        ad = ad_visit if config.window == WINDOW_PER_VISIT else ad + ad_visit
        users.append(user)
        ads.append(ad)
    return SessionProfiles(session.user_id, users, ads, user_stats, ad_stats)
