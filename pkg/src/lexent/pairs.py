"""Labeled text pairs and their JSON-lines file format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import DataError

PROVENANCES = ("gold", "silver", "augmented", "chunk-derived")


@dataclass(frozen=True)
class LabeledPair:
    query_id: str
    text_a: str
    text_b: str
    label: bool
    provenance: str
    weight: float = 1.0
    article_id: str | None = None
    chunk_index: int | None = None

    def __post_init__(self):
        if self.text_a is None or self.text_b is None:
            raise DataError("pair texts must not be null")
        if self.provenance not in PROVENANCES:
            raise DataError(f"unknown provenance {self.provenance!r}")
        if not self.weight > 0:
            raise DataError(f"pair weight must be positive, got {self.weight}")

    def to_json(self) -> dict:
        rec = {
            "query_id": self.query_id,
            "text_a": self.text_a,
            "text_b": self.text_b,
            "label": self.label,
            "provenance": self.provenance,
            "article_id": self.article_id,
            "chunk_index": self.chunk_index,
        }
        if self.weight != 1.0:
            rec["weight"] = self.weight
        return rec

    @classmethod
    def from_json(cls, rec: dict) -> "LabeledPair":
        label = rec["label"]
        if not isinstance(label, bool):
            raise DataError(f"label must be a boolean, got {label!r}")
        return cls(
            query_id=str(rec["query_id"]),
            text_a=rec["text_a"],
            text_b=rec["text_b"],
            label=label,
            provenance=rec["provenance"],
            weight=float(rec.get("weight", 1.0)),
            article_id=rec.get("article_id"),
            chunk_index=rec.get("chunk_index"),
        )


def write_pairs(pairs: Iterable[LabeledPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_json(), ensure_ascii=False) + "\n")


def read_pairs(path: str | Path) -> list[LabeledPair]:
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(LabeledPair.from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, DataError) as e:
            raise DataError(f"{path.name}:{lineno}: bad pair record ({e})") from None
    return out


def read_annotations(path: str | Path) -> dict[str, dict]:
    """``{"query_id", "positive_ids": [...]}`` lines, plus optional ``"label"``.

    Returns ``query_id -> {"positive_ids": [...], "label": bool | None}``.
    """
    path = Path(path)
    out: dict[str, dict] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            qid = str(rec["query_id"])
            ids = [str(x) for x in rec["positive_ids"]]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise DataError(f"{path.name}:{lineno}: bad annotation ({e})") from None
        if qid in out:
            raise DataError(f"{path.name}:{lineno}: duplicate query_id {qid!r}")
        out[qid] = {"positive_ids": ids, "label": rec.get("label")}
    return out


def gold_sets(annotations: dict[str, dict]) -> dict[str, set[str]]:
    return {q: set(a["positive_ids"]) for q, a in annotations.items()}
