"""Rebuild the pipeline golden files: simulate -> analyze -> rank, seed 42.

Run from the repository root only after an intentional output change:
    python tests/golden/regenerate.py
"""

import hashlib
import shutil
import sys
import tempfile
from pathlib import Path

from footprint.cli import main

HERE = Path(__file__).parent
TARGET = HERE / "pipeline_seed42"
KEEP = ["analysis/population.csv", "analysis/summary.csv", "rank/ranking.csv", "rank_by_host/ranking.csv"]


def run_pipeline(work: Path) -> None:
    store = work / "store"
    assert main(["simulate", "--users", "86", "--pages", "15", "--seed", "42", "--out", str(store)]) == 0
    assert main(["analyze", str(store), "--out", str(work / "analysis")]) == 0
    assert main(["rank", str(store), "--out", str(work / "rank")]) == 0
    assert main(["rank", str(store), "--by-host", "--out", str(work / "rank_by_host")]) == 0


def output_digests(work: Path) -> str:
    files = sorted(p for p in work.rglob("*") if p.is_file() and p.suffix in (".csv", ".tsv", ".jsonl"))
    return "".join(f"{hashlib.sha256(p.read_bytes()).hexdigest()}  {p.relative_to(work).as_posix()}\n"
                   for p in files)


if __name__ == "__main__":
    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)
        run_pipeline(work)
        if TARGET.exists():
            shutil.rmtree(TARGET)
        TARGET.mkdir()
        for rel in KEEP:
            dest = TARGET / rel.replace("/", "__")
            shutil.copyfile(work / rel, dest)
        (TARGET / "SHA256SUMS").write_text(output_digests(work))
    sys.exit(0)
