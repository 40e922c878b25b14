"""Sweep the semantic weight on the toy fixture and emit F2 per setting as plot data."""

import argparse
import json
import sys
from pathlib import Path

from lexent.cli import cli

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixture", default=str(ROOT / "tests" / "fixtures" / "toy30"))
    ap.add_argument("--out", default="runs/fusion_sweep")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--strategy", default="relative_threshold")
    args = ap.parse_args()
    fx, out = Path(args.fixture), Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    common = ["--seed", str(args.seed), "--set", "scorer.dim=65536"]
    plot = out / "plot.tsv"
    plot.unlink(missing_ok=True)
    prep = [
        ["ingest", "--input", str(fx / "cases"), "--kind", "case", "--filter-language", "english",
         "--output", str(out / "corpus.jsonl")],
        ["silver", "--corpus", str(out / "corpus.jsonl"), "--output", str(out / "silver.jsonl")],
        ["train", "--stage", f"{out / 'silver.jsonl'}:3", "--output", str(out / "model.npz")],
    ]
    for argv in prep:
        if cli(argv + common):
            sys.exit(2)
    print("w_sem\tP\tR\tF2")
    for i in range(11):
        w = i / 10
        run = out / f"sel_{w:.1f}.tsv"
        code = cli(["fuse", "--queries", str(fx / "queries.jsonl"), "--candidates", str(out / "corpus.jsonl"),
                    "--model", str(out / "model.npz"), "--w-sem", str(w), "--strategy", args.strategy,
                    "--output", str(run)] + common)
        if code:
            sys.exit(code)
        rep_path = out / f"report_{w:.1f}.json"
        code = cli(["eval", "--run", str(run), "--gold", str(fx / "gold.jsonl"), "--output", str(rep_path),
                    "--plot-data", str(plot), "--setting", f"{w:.1f}"] + common)
        if code:
            sys.exit(code)
        rep = json.loads(rep_path.read_text())
        print(f"{w:.1f}\t{rep['p_macro']:.4f}\t{rep['r_macro']:.4f}\t{rep['f2']:.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
