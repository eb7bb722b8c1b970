"""Distances between profile PMFs and per-visit convergence series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .errors import FootprintError
from .ingest import BrowsingSession
from .profile import AnalysisConfig, ProfilePMF, normalize, session_profiles


def _mass(p) -> Sequence[float]:
    return p.mass if isinstance(p, ProfilePMF) else p


def _diffs(p, q) -> list[float]:
    a, b = _mass(p), _mass(q)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return [x - y for x, y in zip(a, b)]


def l1_distance(p, q) -> float:
    """Sum of absolute component differences; accepts PMFs or plain sequences."""
    return math.fsum(abs(d) for d in _diffs(p, q))


def l2_distance(p, q) -> float:
    return math.hypot(*_diffs(p, q))


def tv_distance(p, q) -> float:
    """Total variation distance, exactly half the 1-norm."""
    return l1_distance(p, q) / 2


class SeriesPoint(NamedTuple):
    visit_index: int
    l1: float | None
    l2: float | None
    tv: float | None

    @property
    def present(self) -> bool:
        return self.l1 is not None


@dataclass
class ConvergenceSeries:
    user_id: str
    points: list[SeriesPoint]

    def first_present(self) -> SeriesPoint | None:
        return next((p for p in self.points if p.present), None)

    def percent_change(self, metric: str = "l1") -> float | None:
        """Relative change in percent from the first present point to the last point.

        Negative values mean the distance shrank. ``None`` if either end is
        absent or the starting value is zero.
        """
        first = self.first_present()
        if first is None or not self.points:
            return None
        start, end = getattr(first, metric), getattr(self.points[-1], metric)
        if end is None or start == 0:
            return None
        return (end - start) / start * 100.0


def convergence_series(session: BrowsingSession, config: AnalysisConfig | None = None) -> ConvergenceSeries:
    config = config or AnalysisConfig()
    profiles = session_profiles(session, config)
    points = []
    for k, (user, ad) in enumerate(zip(profiles.user, profiles.ad)):
        if user.total == 0 or ad.total == 0:
            points.append(SeriesPoint(k, None, None, None))
            continue
        p, q = normalize(user), normalize(ad)
        l1 = l1_distance(p, q)
        points.append(SeriesPoint(k, l1, l2_distance(p, q), l1 / 2))
    return ConvergenceSeries(session.user_id, points)


def _mean(values) -> float:
    # exact rational mean, rounded once: averaging copies of x gives back x
    values = [Fraction(v) for v in values]
    return float(sum(values) / len(values))


def population_average(series: Sequence[ConvergenceSeries], user_id: str = "population") -> ConvergenceSeries:
    """Pointwise mean over the series that have a value at each visit index."""
    if not series:
        raise FootprintError("population_average needs at least one series")
    by_index: dict[int, list[SeriesPoint]] = {}
    for s in series:
        for point in s.points:
            by_index.setdefault(point.visit_index, []).append(point)
    points = []
    for k in sorted(by_index):
        present = [p for p in by_index[k] if p.present]
        if not present:
            points.append(SeriesPoint(k, None, None, None))
            continue
        points.append(SeriesPoint(
            k, _mean(p.l1 for p in present), _mean(p.l2 for p in present), _mean(p.tv for p in present),
        ))
    return ConvergenceSeries(user_id, points)
