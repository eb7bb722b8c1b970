"""``footprint`` command line: ingest, analyze, rank, simulate.

Exit codes: 0 success, 2 usage or input error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import re
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .errors import FootprintError, InvariantViolation
from .graph import build_graph, rank_trackers
from .ingest import (
    DEFAULT_EXCLUDED_KINDS,
    BrowsingSession,
    ResourceKind,
    parse_har,
    parse_session_logs,
    session_tally,
    write_session_log,
)
from .keywords import DEFAULT_MAX_PHRASE_LEN, StopwordList
from .metrics import ConvergenceSeries, convergence_series, population_average
from .profile import (
    WINDOW_CUMULATIVE,
    WINDOW_PER_VISIT,
    AnalysisConfig,
    InterestProfile,
    session_profiles,
)
from .simulator import SimulationConfig, simulate_population
from .taxonomy import CategoryTaxonomy, load_taxonomy

log = logging.getLogger("footprint")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3

SEED_ENV = "FOOTPRINT_SEED"
STORE_MANIFEST = "manifest.json"


class InputError(FootprintError):
    pass


# --- output helpers ------------------------------------------------------------

def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x: float | int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    # 12 significant digits keeps golden files stable across libm builds
    return f"{x:.12g}"


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence[object]]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if v is None or isinstance(v, (int, float)) else v for v in row])
    return buf.getvalue().encode("utf-8")


def safe_name(user_id: str) -> str:
    name = re.sub(r"[^A-Za-z0-9._-]", "_", user_id)
    if name != user_id or name.startswith("."):
        name = f"{name}-{hashlib.sha256(user_id.encode('utf-8')).hexdigest()[:8]}"
    return name


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    tool_version: str
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    config: dict[str, object] = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""
    diagnostics: dict[str, object] = field(default_factory=dict)
    synthetic: bool = False

    @classmethod
    def start(cls, command: str, config: dict) -> "RunManifest":
        return cls(__version__, command, config=config, started_at=_now())

    def add_inputs(self, paths: Iterable[Path]) -> None:
        for p in paths:
            self.inputs[str(p)] = sha256_file(p)

    def write(self, out: Path) -> None:
        self.finished_at = _now()
        atomic_write(out / STORE_MANIFEST,
                     (json.dumps(asdict(self), indent=2, sort_keys=True) + "\n").encode("utf-8"))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# --- input helpers -------------------------------------------------------------

def _collect_files(paths: Sequence[str], suffixes: tuple[str, ...]) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(f for f in p.iterdir() if f.is_file() and f.suffix in suffixes))
        elif p.is_file():
            files.append(p)
        else:
            raise InputError(f"{p}: no such file or directory")
    return files


def load_store(store: Path) -> tuple[list[BrowsingSession], list[Path]]:
    """All sessions of a store directory (or a single session-log file), sorted by user."""
    if not store.exists():
        raise InputError(f"{store}: no such session store")
    files = [store] if store.is_file() else sorted(store.glob("*.jsonl"))
    sessions: dict[str, BrowsingSession] = {}
    for f in files:
        try:
            parsed = parse_session_logs(f.read_bytes())
        except FootprintError as exc:
            raise InputError(f"{f}: {exc}") from exc
        for s in parsed:
            if s.user_id in sessions:
                raise InputError(f"{f}: user {s.user_id!r} appears in more than one file")
            sessions[s.user_id] = s
    if not sessions:
        raise InputError(f"{store}: empty session store")
    return [sessions[u] for u in sorted(sessions)], files


def _store_is_synthetic(store: Path) -> bool:
    manifest = (store if store.is_dir() else store.parent) / STORE_MANIFEST
    try:
        return bool(json.loads(manifest.read_text("utf-8")).get("synthetic"))
    except (OSError, ValueError, AttributeError):
        return False


def _parse_kinds(text: str) -> frozenset[ResourceKind]:
    kinds = set()
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            kinds.add(ResourceKind(item))
        except ValueError:
            raise argparse.ArgumentTypeError(f"unknown resource kind {item!r}") from None
    return frozenset(kinds)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _load_taxonomy(path: str | None) -> CategoryTaxonomy:
    if path is None:
        return CategoryTaxonomy.bundled()
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{p}: taxonomy file not found")
    return load_taxonomy(p.read_bytes())


def _kinds_str(kinds: Iterable[ResourceKind]) -> str:
    return ",".join(sorted(k.value for k in kinds))


# --- commands ------------------------------------------------------------------

def cmd_ingest(args) -> int:
    fmt_suffix = {"har": (".har",), "jsonl": (".jsonl",), None: (".har", ".jsonl")}[args.format]
    files = _collect_files(args.paths, fmt_suffix)
    if not files:
        raise InputError("no inputs")
    out = Path(args.out)
    manifest = RunManifest.start("ingest", {"format": args.format, "exclude_kinds": _kinds_str(args.exclude_kinds)})
    sessions: dict[str, BrowsingSession] = {}
    for f in files:
        kind = args.format or ("har" if f.suffix == ".har" else "jsonl")
        try:
            parsed = [parse_har(f.read_bytes(), user_id=f.stem)] if kind == "har" else parse_session_logs(f.read_bytes())
        except FootprintError as exc:
            raise InputError(f"{f}: {exc}") from exc
        for s in parsed:
            if s.user_id in sessions:
                raise InputError(f"{f}: duplicate user {s.user_id!r}")
            sessions[s.user_id] = s
    manifest.add_inputs(files)

    for user in sorted(sessions):
        session = sessions[user]
        tally = session_tally(session, args.exclude_kinds)
        if not tally.balanced():
            raise InvariantViolation(f"filter tally for {user} does not add up: {tally}")
        manifest.diagnostics[user] = dict(visits=len(session.visits), **tally.as_dict())
        atomic_write(out / f"{safe_name(user)}.jsonl", write_session_log(session))
        t = tally.as_dict()
        print(f"{user}: {len(session.visits)} visits, {t['total']} requests, "
              f"{t['emitted']} third-party, {t['excluded_asset_kind']} asset, "
              f"{t['excluded_same_domain']} same-domain, {t['unparseable']} unparseable")
    manifest.write(out)
    print(f"wrote {len(sessions)} session(s) to {out}")
    return EXIT_OK


def _profile_rows(taxonomy: CategoryTaxonomy, profile: InterestProfile):
    total = profile.total
    for name, count in zip(taxonomy.categories, profile.counts):
        yield name, count, (count / total if total else None)


def _series_rows(series: ConvergenceSeries):
    for p in series.points:
        yield series.user_id, p.visit_index, p.l1, p.l2, p.tv


SERIES_HEADER = ("user_id", "visit_index", "l1", "l2", "tv")
SUMMARY_HEADER = ("user_id", "first_visit", "first_l1", "last_l1", "l1_change_pct",
                  "first_l2", "last_l2", "l2_change_pct")


def _summary_row(series: ConvergenceSeries):
    first = series.first_present()
    last = series.points[-1] if series.points else None
    if first is None:
        return (series.user_id, None, None, last and last.l1, None, None, last and last.l2, None)
    return (series.user_id, first.visit_index, first.l1, last.l1, series.percent_change("l1"),
            first.l2, last.l2, series.percent_change("l2"))


def cmd_analyze(args) -> int:
    store = Path(args.store)
    taxonomy = _load_taxonomy(args.taxonomy)
    if args.stopwords is not None:
        sw_path = Path(args.stopwords)
        if not sw_path.is_file():
            raise InputError(f"{sw_path}: stopword file not found")
        stopwords = StopwordList.from_text(sw_path.read_text("utf-8"))
    else:
        stopwords = StopwordList.bundled()
    config = AnalysisConfig(
        taxonomy=taxonomy, stopwords=stopwords, max_phrase_len=args.max_phrase_len,
        excluded_kinds=args.exclude_kinds, window=args.window,
    )
    sessions, files = load_store(store)
    out = Path(args.out)
    manifest = RunManifest.start("analyze", {
        "taxonomy": args.taxonomy or "<bundled>", "stopwords": args.stopwords or "<bundled>",
        "max_phrase_len": args.max_phrase_len, "window": args.window,
        "exclude_kinds": _kinds_str(args.exclude_kinds),
    })
    manifest.add_inputs(files + [Path(p) for p in (args.taxonomy, args.stopwords) if p])
    manifest.synthetic = _store_is_synthetic(store)

    all_series = []
    for session in sessions:
        name = safe_name(session.user_id)
        profiles = session_profiles(session, config)
        series = convergence_series(session, config)
        for p in series.points:
            if p.present and not (0 <= p.l1 <= 2 + 1e-12 and p.tv == p.l1 / 2 and p.l2 <= math.sqrt(2) + 1e-12):
                raise InvariantViolation(f"{session.user_id}: distance out of range at visit {p.visit_index}")
        all_series.append(series)
        atomic_write(out / "profiles" / f"{name}.user.csv",
                     csv_bytes(("category", "count", "mass"), _profile_rows(taxonomy, profiles.user[-1])))
        atomic_write(out / "profiles" / f"{name}.ad.csv",
                     csv_bytes(("category", "count", "mass"), _profile_rows(taxonomy, profiles.ad[-1])))
        atomic_write(out / "series" / f"{name}.csv", csv_bytes(SERIES_HEADER, _series_rows(series)))
        manifest.diagnostics[session.user_id] = {
            "user_tags": profiles.user_stats.classified, "user_unclassified": profiles.user_stats.unclassified,
            "ad_tags": profiles.ad_stats.classified, "ad_unclassified": profiles.ad_stats.unclassified,
        }

    population = population_average(all_series)
    atomic_write(out / "population.csv", csv_bytes(SERIES_HEADER, _series_rows(population)))
    atomic_write(out / "summary.csv",
                 csv_bytes(SUMMARY_HEADER, [_summary_row(s) for s in all_series] + [_summary_row(population)]))
    manifest.write(out)

    row = _summary_row(population)
    print(f"analyzed {len(sessions)} session(s){' (synthetic)' if manifest.synthetic else ''}; "
          f"population l1 change {fmt(row[4]) or 'n/a'}%, l2 change {fmt(row[7]) or 'n/a'}%")
    return EXIT_OK


def cmd_rank(args) -> int:
    store = Path(args.store)
    sessions, files = load_store(store)
    graph = build_graph(sessions, by_host=args.by_host, excluded_kinds=args.exclude_kinds)
    ranking = rank_trackers(graph)
    if sorted(r.tracker_domain for r in ranking) != sorted(graph.tracker_nodes):
        raise InvariantViolation("ranking is not a permutation of the tracker nodes")
    out = Path(args.out)
    manifest = RunManifest.start("rank", {
        "by_host": args.by_host, "top": args.top, "exclude_kinds": _kinds_str(args.exclude_kinds),
    })
    manifest.add_inputs(files)
    manifest.synthetic = _store_is_synthetic(store)
    manifest.diagnostics = {"pages": len(graph.page_adj), "trackers": len(graph.tracker_adj),
                            "edges": len(graph.edges)}
    rows = ranking if args.top == 0 else ranking[: args.top]
    atomic_write(out / "ranking.csv", csv_bytes(("tracker_domain", "avg_knn", "degree"), rows))
    atomic_write(out / "edges.tsv", "".join(f"{p}\t{t}\n" for p, t in graph.edge_list()).encode("utf-8"))
    manifest.write(out)
    for r in rows:
        print(f"{r.tracker_domain}\t{fmt(r.avg_knn)}\t{r.degree}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = args.seed
    env_seed = os.environ.get(SEED_ENV)
    if env_seed not in (None, ""):
        try:
            seed = int(env_seed)
        except ValueError:
            raise InputError(f"{SEED_ENV}={env_seed!r} is not an integer") from None
    taxonomy = _load_taxonomy(args.taxonomy)
    config = SimulationConfig(
        seed=seed, num_users=args.users, pages_per_user=args.pages, taxonomy=taxonomy,
        responsiveness=args.responsiveness, tags_per_page=args.tags_per_page,
        params_per_page=args.params_per_page, trackers_per_page=args.trackers_per_page,
        bias_concentration=args.bias_concentration, tracker_pool=args.tracker_pool,
    )
    out = Path(args.out)
    manifest = RunManifest.start("simulate", {
        f: getattr(config, f) for f in SimulationConfig.__dataclass_fields__ if f != "taxonomy"
    } | {"taxonomy": args.taxonomy or "<bundled>"})
    if args.taxonomy:
        manifest.add_inputs([Path(args.taxonomy)])
    manifest.synthetic = True
    sessions = simulate_population(config)
    for s in sessions:
        atomic_write(out / f"{safe_name(s.user_id)}.jsonl", write_session_log(s))
    manifest.write(out)
    print(f"wrote {len(sessions)} synthetic session(s) x {config.pages_per_user} pages to {out}")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="footprint", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    kinds_help = f"resource kinds dropped before domain filtering (default {_kinds_str(DEFAULT_EXCLUDED_KINDS)})"

    p = sub.add_parser("ingest", help="convert HAR / session-log captures into a session store")
    p.add_argument("paths", nargs="+", help="capture files or directories")
    p.add_argument("--format", choices=("har", "jsonl"), default=None,
                   help="input format (default: by file extension)")
    p.add_argument("--exclude-kinds", type=_parse_kinds, default=DEFAULT_EXCLUDED_KINDS, help=kinds_help)
    p.add_argument("--out", required=True, help="output store directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="user/ad profiles and convergence series")
    p.add_argument("store", help="session store directory or session-log file")
    p.add_argument("--taxonomy", help="taxonomy file (default: bundled 14-category taxonomy)")
    p.add_argument("--stopwords", help="stopword list, one word per line (default: bundled)")
    p.add_argument("--max-phrase-len", type=_positive_int, default=DEFAULT_MAX_PHRASE_LEN)
    p.add_argument("--window", choices=(WINDOW_CUMULATIVE, WINDOW_PER_VISIT), default=WINDOW_CUMULATIVE,
                   help="ad profile over all visits so far, or the current visit only")
    p.add_argument("--exclude-kinds", type=_parse_kinds, default=DEFAULT_EXCLUDED_KINDS, help=kinds_help)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("rank", help="rank trackers by average neighbour degree")
    p.add_argument("store")
    p.add_argument("--by-host", action="store_true", help="tracker nodes are full hosts, not registrable domains")
    p.add_argument("--top", type=int, default=20, help="rows to keep; 0 keeps all (default 20)")
    p.add_argument("--exclude-kinds", type=_parse_kinds, default=DEFAULT_EXCLUDED_KINDS, help=kinds_help)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    defaults = SimulationConfig.__dataclass_fields__
    p = sub.add_parser("simulate", help="generate a synthetic session store")
    p.add_argument("--seed", type=int, default=defaults["seed"].default,
                   help=f"random seed; ${SEED_ENV} overrides it")
    p.add_argument("--users", type=int, default=defaults["num_users"].default)
    p.add_argument("--pages", type=int, default=defaults["pages_per_user"].default)
    p.add_argument("--responsiveness", type=float, default=defaults["responsiveness"].default)
    p.add_argument("--tags-per-page", type=int, default=defaults["tags_per_page"].default)
    p.add_argument("--params-per-page", type=int, default=defaults["params_per_page"].default)
    p.add_argument("--trackers-per-page", type=int, default=defaults["trackers_per_page"].default)
    p.add_argument("--bias-concentration", type=float, default=defaults["bias_concentration"].default)
    p.add_argument("--tracker-pool", type=int, default=defaults["tracker_pool"].default)
    p.add_argument("--taxonomy")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"footprint: internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (FootprintError, OSError, ValueError) as exc:
        print(f"footprint: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
