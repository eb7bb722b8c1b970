"""Bipartite page/tracker graph and average-neighbour-degree ranking."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .ingest import DEFAULT_EXCLUDED_KINDS, BrowsingSession, ResourceKind, extract_third_party_requests

log = logging.getLogger(__name__)


@dataclass
class TrackerGraph:
    """Undirected graph whose edges always join a page URL and a tracker."""

    page_adj: dict[str, set[str]] = field(default_factory=dict)
    tracker_adj: dict[str, set[str]] = field(default_factory=dict)

    @property
    def page_nodes(self) -> set[str]:
        return set(self.page_adj)

    @property
    def tracker_nodes(self) -> set[str]:
        return set(self.tracker_adj)

    @property
    def edges(self) -> set[tuple[str, str]]:
        return {(page, t) for page, trackers in self.page_adj.items() for t in trackers}

    def add_page(self, page: str) -> None:
        if page in self.tracker_adj:
            raise ValueError(f"{page!r} is already a tracker node")
        self.page_adj.setdefault(page, set())

    def add_tracker(self, tracker: str) -> None:
        if tracker in self.page_adj:
            raise ValueError(f"{tracker!r} is already a page node")
        self.tracker_adj.setdefault(tracker, set())

    def add_edge(self, page: str, tracker: str) -> None:
        self.add_page(page)
        self.add_tracker(tracker)
        self.page_adj[page].add(tracker)
        self.tracker_adj[tracker].add(page)

    def edge_list(self) -> list[tuple[str, str]]:
        return sorted(self.edges)


def build_graph(sessions: Iterable[BrowsingSession], by_host: bool = False,
                excluded_kinds: Iterable[ResourceKind] = DEFAULT_EXCLUDED_KINDS) -> TrackerGraph:
    """Link each visited page to every tracker it sent a third-party request to.

    Trackers are identified by registrable domain, or by full host name when
    ``by_host`` is set.
    """
    excluded_kinds = frozenset(excluded_kinds)
    graph = TrackerGraph()
    for session in sessions:
        for visit in session.visits:
            graph.add_page(visit.page_url)
            for req in extract_third_party_requests(visit, excluded_kinds):
                graph.add_edge(visit.page_url, req.full_host if by_host else req.tracker_domain)
    return graph


def avg_neighbor_degree(graph: TrackerGraph, node: str) -> float:
    """Mean number of trackers on the pages that ``node`` appears on.

    An isolated tracker gets 0.
    """
    if node not in graph.tracker_adj:
        raise KeyError(f"unknown tracker node {node!r}")
    pages = graph.tracker_adj[node]
    if not pages:
        log.warning("tracker %s has no neighbours; k_nn defined as 0", node)
        return 0.0
    return sum(len(graph.page_adj[p]) for p in pages) / len(pages)


class RankingRow(NamedTuple):
    tracker_domain: str
    avg_knn: float
    degree: int


def rank_trackers(graph: TrackerGraph) -> list[RankingRow]:
    """All trackers by k_nn descending, then degree descending, then name."""
    rows = [
        RankingRow(t, avg_neighbor_degree(graph, t), len(graph.tracker_adj[t]))
        for t in graph.tracker_adj
    ]
    rows.sort(key=lambda r: (-r.avg_knn, -r.degree, r.tracker_domain))
    return rows
