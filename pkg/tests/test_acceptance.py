"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the report lines.
"""

import importlib.util
import math
import random
import time
from fractions import Fraction
from pathlib import Path

from footprint.domains import registrable_domain
from footprint.graph import TrackerGraph, avg_neighbor_degree
from footprint.ingest import extract_third_party_requests, parse_har, session_tally
from footprint.keywords import StopwordList, rake_extract
from footprint.metrics import convergence_series, l1_distance, l2_distance, population_average, tv_distance
from footprint.profile import ProfilePMF
from footprint.simulator import SimulatedUser, SimulationConfig, simulate_population, simulate_session

from conftest import DATA, GOLDEN


def report(number, name, ok, detail=""):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {number} failed: {detail}"


def _random_pmf(rng, L):
    raw = [rng.random() for _ in range(L)]
    if rng.random() < 0.2:
        raw[rng.randrange(L)] = 0.0
    if sum(raw) == 0:
        raw[0] = 1.0
    total = sum(raw)
    return [x / total for x in raw]


def test_criterion_1_metric_identities():
    rng = random.Random(20261016)
    start = time.perf_counter()
    failures = []
    for trial in range(2000):
        L = rng.randint(2, 32)
        p, q = _random_pmf(rng, L), _random_pmf(rng, L)
        l1, l2, tv = l1_distance(p, q), l2_distance(p, q), tv_distance(p, q)
        eps = 1e-12
        checks = [
            abs(tv - l1 / 2) <= 1e-15,
            -eps <= l1 <= 2 + eps,
            l2 <= l1 + eps,
            l1 <= math.sqrt(L) * l2 + eps,
            l1_distance(p, p) == 0 and l2_distance(p, p) == 0 and tv_distance(p, p) == 0,
            l1 == l1_distance(q, p) and l2 == l2_distance(q, p) and tv == tv_distance(q, p),
        ]
        if not all(checks):
            failures.append((trial, L, checks))
    elapsed = time.perf_counter() - start
    report(1, "metric identities over 2000 random PMF pairs",
           not failures and elapsed < 1.0, f"{len(failures)} failures, {elapsed:.3f}s")


def test_criterion_2_hand_traced_distances():
    p, q = ProfilePMF((0.5, 0.5)), ProfilePMF((0.75, 0.25))
    got = (l1_distance(p, q), l2_distance(p, q), tv_distance(p, q))
    # |0.5-0.75| + |0.5-0.25| = 0.5 ; sqrt(0.0625 + 0.0625) = sqrt(0.125) ; 0.5 / 2
    want = (0.5, 0.35355339, 0.25)
    ok = all(abs(g - w) <= 1e-8 for g, w in zip(got, want))
    report(2, "hand-traced l1/l2/tv", ok, "got " + " / ".join(f"{g:.8f}" for g in got))


def _brute_force_knn(edges, tracker):
    edges = set(edges)
    neighbours = [p for p, t in edges if t == tracker]
    if not neighbours:
        return Fraction(0)
    return Fraction(sum(sum(1 for p2, _ in edges if p2 == p) for p in neighbours), len(neighbours))


def test_criterion_3_knn_oracle():
    rng = random.Random(3)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        n_pages = rng.randint(1, 49)
        n_trackers = rng.randint(1, 50 - n_pages)
        density = rng.random()
        edges = [(f"p{i}", f"t{j}") for i in range(n_pages) for j in range(n_trackers) if rng.random() < density]
        g = TrackerGraph()
        for t in range(n_trackers):
            g.add_tracker(f"t{t}")
        for p, t in edges:
            g.add_edge(p, t)
        for t in range(n_trackers):
            if avg_neighbor_degree(g, f"t{t}") != float(_brute_force_knn(edges, f"t{t}")):
                mismatches += 1
    star = TrackerGraph()
    for i in range(10):
        star.add_edge(f"leaf{i}", "hub.net")
    star_knn = avg_neighbor_degree(star, "hub.net")
    elapsed = time.perf_counter() - start
    report(3, "k_nn equals brute force on 100 random graphs, star gives 1",
           mismatches == 0 and star_knn == 1 and elapsed < 1.0,
           f"{mismatches} mismatches, star {star_knn}, {elapsed:.3f}s")


def test_criterion_4_rake_trace():
    out = [(k.phrase, k.score) for k in rake_extract("good apples, good red wine", StopwordList([]))]
    ok = [s for _, s in out] == [8.5, 4.5] and out[0][0] == "good red wine"
    report(4, "RAKE scores 8.5 then 4.5", ok, repr(out))


def _population_l1_change(seed, responsiveness):
    cfg = SimulationConfig(seed=seed, responsiveness=responsiveness)
    pop = population_average([convergence_series(s) for s in simulate_population(cfg)])
    first, last = pop.first_present(), pop.points[-1]
    return first.l1, last.l1, pop


def _concentrated_user(L=14, hot=3):
    return SimulatedUser(ProfilePMF(tuple(1.0 if i == hot else 0.0 for i in range(L))))


def test_criterion_5_convergence_reproduction():
    start = time.perf_counter()
    decreasing = 0
    changes = []
    for seed in range(30):
        first, last, pop = _population_l1_change(seed, 0.9)
        assert len(pop.points) == 15
        change = (last - first) / first
        changes.append(change)
        decreasing += change <= -0.03
    single = convergence_series(simulate_session(SimulationConfig(seed=42, num_users=1, responsiveness=1.0),
                                                 _concentrated_user()))
    l2_drop = -single.percent_change("l2")
    elapsed = time.perf_counter() - start
    ok = decreasing >= 27 and l2_drop >= 30 and elapsed < 30
    report(5, "population l1 falls >=3% in >=90% of 30 seeds, single-user l2 falls >=30%", ok,
           f"{decreasing}/30 seeds, median l1 change {100 * sorted(changes)[15]:.1f}%, "
           f"single-user l2 change {-l2_drop:.1f}%, {elapsed:.1f}s")


def test_criterion_6_null_control():
    deltas = [last - first for first, last, _ in (_population_l1_change(seed, 0.0) for seed in range(30))]
    mean = math.fsum(deltas) / len(deltas)
    report(6, "responsiveness 0 gives no drift in population l1", abs(mean) <= 0.05, f"mean delta {mean:+.4f}")


def _load_regenerate():
    spec = importlib.util.spec_from_file_location("golden_regenerate", GOLDEN / "regenerate.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_criterion_7_pipeline_determinism(tmp_path):
    regen = _load_regenerate()
    regen.run_pipeline(tmp_path)
    target = GOLDEN / "pipeline_seed42"
    digests_ok = regen.output_digests(tmp_path) == (target / "SHA256SUMS").read_text()
    copies_ok = all((tmp_path / rel).read_bytes() == (target / rel.replace("/", "__")).read_bytes()
                    for rel in regen.KEEP)
    n = len((target / "SHA256SUMS").read_text().splitlines())
    report(7, "simulate -> analyze -> rank on seed 42 matches golden bytes", digests_ok and copies_ok,
           f"{n} files hashed, digests {'match' if digests_ok else 'differ'}")


EXPECTED_SURVIVORS = {
    ("https://www.winemag.example.co.uk/reviews",
     "https://bid.g.doubleclick.net/adj/N123;kw=wine;sz=300x250?ord=42&kw=red%20wine"),
    ("https://www.winemag.example.co.uk/reviews", "https://ib.adnxs.com/getuid?q=travel"),
    ("https://news.example.org/", "https://sync.crwdcntrl.net/map?kw=politics&kw=election"),
    ("https://news.example.org/", "https://www.example.co.uk/promo"),
}


def test_criterion_8_filter_conformance():
    session = parse_har((DATA / "filter_fixture.har").read_bytes())
    survivors = {(r.origin_page, r.url) for v in session.visits for r in extract_third_party_requests(v)}
    tally = session_tally(session)
    excluded = sum(tally.excluded.values())
    ok = (survivors == EXPECTED_SURVIVORS and tally.total == 15
          and tally.emitted + excluded + tally.unparseable == tally.total
          and registrable_domain("bid.g.doubleclick.net") == "doubleclick.net")
    report(8, "only cross-domain non-asset requests survive, tally balances", ok,
           f"{tally.emitted} emitted + {excluded} excluded + {tally.unparseable} unparseable = {tally.total}")
