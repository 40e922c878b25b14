"""Sliding-window chunking of long articles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DataError
from .pairs import LabeledPair


@dataclass(frozen=True)
class ChunkSpec:
    window: int = 150
    stride: int = 50

    def __post_init__(self):
        if not 0 < self.stride <= self.window:
            raise DataError(f"invalid chunk spec {self.window}/{self.stride}: need 0 < stride <= window")

    @classmethod
    def parse(cls, text: str) -> "ChunkSpec":
        """``"150/50"`` -> ChunkSpec(150, 50)."""
        try:
            w, s = text.split("/")
            return cls(int(w), int(s))
        except ValueError:
            raise DataError(f"chunk spec must look like <window>/<stride>, got {text!r}") from None


@dataclass(frozen=True)
class Chunk:
    article_id: str
    chunk_index: int
    start_token: int
    end_token: int
    # the full token list of the article; text is joined on demand
    source: Sequence[str] = field(default=(), repr=False, compare=False)

    @property
    def text(self) -> str:
        return " ".join(self.source[self.start_token:self.end_token])


def expected_chunk_count(length: int, spec: ChunkSpec) -> int:
    if length <= 0:
        return 0
    return 1 + math.ceil(max(0, length - spec.window) / spec.stride)


def chunk_tokens(tokens: Sequence[str], spec: ChunkSpec, article_id: str = "") -> list[Chunk]:
    n = len(tokens)
    chunks = []
    start = 0
    while start < n:
        end = min(start + spec.window, n)
        chunks.append(Chunk(article_id, len(chunks), start, end, tokens))
        if end == n:
            break
        start += spec.stride
    return chunks


def expand_pairs(question: str, article: tuple[str, Sequence[str]], label: bool,
                 spec: ChunkSpec, query_id: str = "") -> list[LabeledPair]:
    """One (question, chunk) pair per chunk, each carrying the article's label."""
    article_id, tokens = article
    if not tokens:
        raise DataError(f"article {article_id!r} is empty")
    return [
        LabeledPair(query_id, question, c.text, label, "chunk-derived",
                    article_id=article_id, chunk_index=c.chunk_index)
        for c in chunk_tokens(tokens, spec, article_id)
    ]
