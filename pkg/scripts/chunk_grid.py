"""Chunk counts and pair expansion for the window/stride grid over an article corpus."""

import argparse
from pathlib import Path

from lexent.chunker import ChunkSpec, chunk_tokens
from lexent.corpus import ingest_collection
from lexent.lexical import tokenize

GRID = ["110/20", "150/10", "150/20", "150/40", "150/50", "200/50", "300/50"]
ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--articles", default=str(ROOT / "tests" / "fixtures" / "toy30" / "cases"))
    ap.add_argument("--kind", default="article")
    args = ap.parse_args()
    docs = ingest_collection(args.articles, args.kind)
    lengths = [len(tokenize(d.text)) for d in docs]
    print(f"{len(docs)} documents, mean length {sum(lengths) / max(1, len(lengths)):.1f} tokens")
    print("setting\tchunks\tchunks/doc\tmax")
    for setting in GRID:
        spec = ChunkSpec.parse(setting)
        counts = [len(chunk_tokens(tokenize(d.text), spec)) for d in docs]
        print(f"{setting}\t{sum(counts)}\t{sum(counts) / max(1, len(counts)):.2f}\t{max(counts, default=0)}")


if __name__ == "__main__":
    main()
