"""Synthetic browsing sessions from a toy advertising feedback loop.

Each simulated user has a fixed interest bias over the taxonomy. On every
visit the page carries tags drawn from that bias, and the trackers on the
page carry ad keywords drawn from

    responsiveness * (user's tag histogram so far) + (1 - responsiveness) * uniform

so with responsiveness 1 the ads chase the observed profile and with 0 they
ignore it. Output is labelled synthetic and uses the session-log model, so
it goes through exactly the same ingestion and analysis as real captures.

Randomness is counter based: every (seed, user, visit, stream) key hashes to
its own generator, so users can be produced in any order or in parallel and
still give identical output. Category draws use systematic (low-variance)
sampling: one uniform offset, ``n`` evenly spaced points through the CDF.
This keeps each page's histogram within one count of its expectation, so the
empirical profiles are not dominated by sampling noise on early visits.
"""

from __future__ import annotations

import hashlib
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from urllib.parse import quote, urlencode

from .errors import ConfigError
from .ingest import BrowsingSession, HttpRequestRecord, PageVisit, ResourceKind
from .profile import ProfilePMF
from .taxonomy import CategoryTaxonomy

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class SimulationConfig:
    seed: int = 42
    num_users: int = 86
    pages_per_user: int = 15
    taxonomy: CategoryTaxonomy = field(default_factory=CategoryTaxonomy.bundled)
    responsiveness: float = 0.9
    tags_per_page: int = 28
    params_per_page: int = 28
    trackers_per_page: int = 3
    # Dirichlet concentration for user biases; lower is more peaked
    bias_concentration: float = 1.0
    tracker_pool: int = 24
    site_pool: int = 40
    articles_per_site: int = 5

    def __post_init__(self):
        checks = [
            (0 <= self.seed <= _MAX_SEED, "seed must be a 64-bit unsigned integer"),
            (self.num_users >= 1, "num_users must be positive"),
            (self.pages_per_user >= 1, "pages_per_user must be positive"),
            (0.0 <= self.responsiveness <= 1.0, "responsiveness must lie in [0, 1]"),
            (self.tags_per_page >= 1, "tags_per_page must be positive"),
            (self.params_per_page >= 0, "params_per_page must be non-negative"),
            (self.trackers_per_page >= 1, "trackers_per_page must be positive"),
            (self.bias_concentration > 0, "bias_concentration must be positive"),
            (self.tracker_pool >= self.trackers_per_page, "tracker_pool smaller than trackers_per_page"),
            (self.site_pool >= 1 and self.articles_per_site >= 1, "site_pool and articles_per_site must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        empty = [name for name, terms in zip(self.taxonomy.categories, self.taxonomy.terms_by_category())
                 if not terms]
        if empty:
            raise ConfigError("taxonomy has no lexicon term for categories: " + ", ".join(empty))


@dataclass(frozen=True)
class SimulatedUser:
    bias: ProfilePMF


def keyed_rng(*key: object) -> random.Random:
    digest = hashlib.sha256(":".join(str(k) for k in key).encode("ascii")).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


def systematic_draw(rng: random.Random, n: int, pmf: list[float] | tuple[float, ...]) -> list[int]:
    """``n`` category indices at evenly spaced points of the CDF, shuffled."""
    if n == 0:
        return []
    cdf = list(accumulate(pmf))
    last = max(i for i, p in enumerate(pmf) if p > 0)
    offset = rng.random()
    draws = [min(bisect_right(cdf, (offset + i) / n * cdf[-1]), last) for i in range(n)]
    rng.shuffle(draws)
    return draws


def user_label(index: int) -> str:
    return f"sim-{index:03d}"


def draw_user(config: SimulationConfig, user_index: int) -> SimulatedUser:
    """Dirichlet bias from normalized gamma draws."""
    rng = keyed_rng(config.seed, user_index, "bias")
    raw = [rng.gammavariate(config.bias_concentration, 1.0) for _ in config.taxonomy.categories]
    total = sum(raw)
    if total <= 0:
        raw, total = [1.0] * len(raw), float(len(raw))
    return SimulatedUser(ProfilePMF(tuple(x / total for x in raw)))


def _tracker_weights(pool: int) -> list[float]:
    return [1.0 / (j + 1) for j in range(pool)]


def _pick_trackers(rng: random.Random, config: SimulationConfig) -> list[int]:
    remaining = list(range(config.tracker_pool))
    weights = _tracker_weights(config.tracker_pool)
    chosen = []
    for _ in range(config.trackers_per_page):
        j = rng.choices(range(len(remaining)), weights=weights)[0]
        chosen.append(remaining.pop(j))
        weights.pop(j)
    return chosen


def simulate_session(config: SimulationConfig, user: SimulatedUser, user_index: int = 0) -> BrowsingSession:
    taxonomy = config.taxonomy
    L = taxonomy.size
    terms = taxonomy.terms_by_category()
    uniform = [1.0 / L] * L
    r = config.responsiveness
    label = user_label(user_index)

    seen = [0] * L
    visits = []
    for k in range(config.pages_per_user):
        rng = keyed_rng(config.seed, user_index, k, "visit")
        page_tags = systematic_draw(rng, config.tags_per_page, user.bias.mass)
        total = sum(seen)
        if total == 0:
            mix = uniform
        else:
            mix = [r * c / total + (1 - r) / L for c in seen]
        ad_tags = systematic_draw(rng, config.params_per_page, mix)
        for c in page_tags:
            seen[c] += 1

        meta = [rng.choice(terms[c]) for c in page_tags]
        ad_terms = [rng.choice(terms[c]) for c in ad_tags]

        site = rng.randrange(config.site_pool)
        article = rng.randrange(config.articles_per_site)
        host = f"www.site{site:03d}.com"
        page_url = f"https://{host}/article/{article}"
        query = urlencode([("uid", label)] + [("kw", t) for t in ad_terms], quote_via=quote)

        requests = [HttpRequestRecord(f"https://{host}/static/app.js", ResourceKind.SCRIPT,
                                      "application/javascript")]
        for j in _pick_trackers(rng, config):
            prefix = rng.choice(("ads", "px", "sync"))
            requests.append(HttpRequestRecord(
                f"https://{prefix}.adnet{j:02d}.net/collect?{query}", ResourceKind.XHR, "application/json",
            ))
        requests.append(HttpRequestRecord(
            f"https://cdn.adnet00.net/pixel.gif?uid={label}", ResourceKind.IMAGE, "image/gif",
        ))
        visits.append(PageVisit(
            page_url=page_url,
            visit_index=k,
            page_text="",
            meta_keywords=tuple(meta),
            requests=tuple(requests),
        ))
    return BrowsingSession(user_id=label, visits=tuple(visits))


def simulate_population(config: SimulationConfig) -> list[BrowsingSession]:
    return [simulate_session(config, draw_user(config, i), i) for i in range(config.num_users)]
