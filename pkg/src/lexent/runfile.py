"""TSV run files: ``query_id  doc_id  rank  score  run_tag``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError


@dataclass(frozen=True)
class RunRecord:
    query_id: str
    doc_id: str
    rank: int
    score: float
    run_tag: str


@dataclass(frozen=True)
class RunFile:
    records: tuple[RunRecord, ...]

    def __post_init__(self):
        validate(self.records)

    def by_query(self) -> dict[str, list[RunRecord]]:
        out: dict[str, list[RunRecord]] = {}
        for r in self.records:
            out.setdefault(r.query_id, []).append(r)
        return out

    def id_sets(self) -> dict[str, set[str]]:
        return {q: {r.doc_id for r in recs} for q, recs in self.by_query().items()}

    def rankings(self) -> dict[str, list[tuple[str, float]]]:
        return {q: [(r.doc_id, r.score) for r in recs] for q, recs in self.by_query().items()}

    @classmethod
    def from_rankings(cls, rankings: Mapping[str, Sequence[tuple[str, float]]], tag: str) -> "RunFile":
        recs = [RunRecord(q, d, i, s, tag)
                for q in sorted(rankings) for i, (d, s) in enumerate(rankings[q], 1)]
        return cls(tuple(recs))


def validate(records: Iterable[RunRecord], where: str = "run") -> None:
    last: dict[str, RunRecord] = {}
    for n, r in enumerate(records, 1):
        for field_name in ("query_id", "doc_id", "run_tag"):
            v = getattr(r, field_name)
            if not v or any(c in v for c in "\t\n\r"):
                raise DataError(f"{where}: record {n}: bad {field_name} {v!r}")
        if not math.isfinite(r.score):
            raise DataError(f"{where}: record {n}: non-finite score")
        prev = last.get(r.query_id)
        expected = 1 if prev is None else prev.rank + 1
        if r.rank != expected:
            raise DataError(f"{where}: record {n}: query {r.query_id} has rank {r.rank}, expected {expected}")
        if prev is not None and r.score > prev.score:
            raise DataError(f"{where}: record {n}: scores increase within query {r.query_id}")
        last[r.query_id] = r


def write_run(run: RunFile, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in run.records:
            fh.write(f"{r.query_id}\t{r.doc_id}\t{r.rank}\t{r.score!r}\t{r.run_tag}\n")


def read_run(path: str | Path) -> RunFile:
    path = Path(path)
    recs = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").split("\n"), 1):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            raise DataError(f"{path.name}:{lineno}: expected 5 tab-separated columns, got {len(cols)}")
        try:
            rank, score = int(cols[2]), float(cols[3])
        except ValueError:
            raise DataError(f"{path.name}:{lineno}: non-numeric rank or score") from None
        recs.append(RunRecord(cols[0], cols[1], rank, score, cols[4]))
    validate(recs, path.name)
    return RunFile(tuple(recs))
