"""Run ingest -> index -> retrieve -> silver -> train -> fuse -> eval on the toy fixture."""

import argparse
import sys
from pathlib import Path

from lexent.cli import cli

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixture", default=str(ROOT / "tests" / "fixtures" / "toy30"))
    ap.add_argument("--out", default="runs/toy30")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--w-sem", type=float, default=0.3)
    args = ap.parse_args()
    fx, out = Path(args.fixture), Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    common = ["--seed", str(args.seed), "--set", "scorer.dim=65536"]
    steps = [
        ["ingest", "--input", str(fx / "cases"), "--kind", "case", "--filter-language", "english",
         "--output", str(out / "corpus.jsonl")],
        ["index", "--corpus", str(out / "corpus.jsonl"), "--output", str(out / "docs.bm25")],
        ["retrieve", "--index", str(out / "docs.bm25"), "--queries", str(fx / "queries.jsonl"),
         "--k", "10", "--output", str(out / "bm25.tsv")],
        ["silver", "--corpus", str(out / "corpus.jsonl"), "--output", str(out / "silver.jsonl")],
        ["train", "--stage", f"{out / 'silver.jsonl'}:2", "--output", str(out / "model.npz")],
        ["fuse", "--queries", str(fx / "queries.jsonl"), "--candidates", str(out / "corpus.jsonl"),
         "--prefilter", str(out / "bm25.tsv"), "--model", str(out / "model.npz"),
         "--w-sem", str(args.w_sem), "--output", str(out / "selected.tsv"),
         "--ranked-output", str(out / "ranked.tsv")],
        ["eval", "--run", str(out / "selected.tsv"), "--gold", str(fx / "gold.jsonl"),
         "--output", str(out / "report.json")],
    ]
    for argv in steps:
        code = cli(argv + common)
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
