"""Offline analysis of how third-party trackers profile a browsing user.

Captured sessions are reduced to a user interest profile (page keywords) and
an advertising profile (keywords leaked in third-party request parameters),
both histograms over a fixed category taxonomy. Their distance per visit
shows how quickly ads converge on the user; the page/tracker graph ranks
trackers by how connected their pages are.
"""

__version__ = "0.1.0"

from .domains import registrable_domain
from .graph import TrackerGraph, avg_neighbor_degree, build_graph, rank_trackers
from .ingest import (
    BrowsingSession,
    HttpRequestRecord,
    PageVisit,
    ResourceKind,
    ThirdPartyRequest,
    extract_third_party_requests,
    filter_requests,
    parse_har,
    parse_session_log,
    parse_session_logs,
    write_session_log,
)
from .keywords import ScoredKeyword, StopwordList, collect_meta_keywords, rake_extract
from .metrics import (
    ConvergenceSeries,
    convergence_series,
    l1_distance,
    l2_distance,
    population_average,
    tv_distance,
)
from .profile import (
    AnalysisConfig,
    InterestProfile,
    ProfilePMF,
    ad_profile_upto,
    add_tags,
    normalize,
    user_profile_upto,
)
from .simulator import SimulatedUser, SimulationConfig, simulate_population, simulate_session
from .taxonomy import CategoryTaxonomy, classify, load_taxonomy
