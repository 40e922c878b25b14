"""Tokenization, Okapi BM25 over an inverted index, and tf-idf cosine."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError

FORMAT_TAG = "BM25v1"


def _is_cjk(ch: str) -> bool:
    o = ord(ch)
    return (
        0x3040 <= o <= 0x30FF  # hiragana, katakana
        or 0x3400 <= o <= 0x4DBF
        or 0x4E00 <= o <= 0x9FFF
        or 0xF900 <= o <= 0xFAFF
        or 0xFF66 <= o <= 0xFF9F  # half-width katakana
        or 0x20000 <= o <= 0x2FA1F
    )


def _cjk_bigrams(run: str) -> list[str]:
    if len(run) == 1:
        return [run]
    return [run[i:i + 2] for i in range(len(run) - 1)]


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric runs; CJK runs become overlapping bigrams."""
    tokens: list[str] = []
    buf: list[str] = []
    mode = None  # "latin" | "cjk" | None
    for ch in text.lower():
        if _is_cjk(ch):
            kind = "cjk"
        elif ch.isalnum():
            kind = "latin"
        else:
            kind = None
        if kind != mode and buf:
            run = "".join(buf)
            tokens.extend(_cjk_bigrams(run) if mode == "cjk" else [run])
            buf = []
        mode = kind
        if kind is not None:
            buf.append(ch)
    if buf:
        run = "".join(buf)
        tokens.extend(_cjk_bigrams(run) if mode == "cjk" else [run])
    return tokens


def bm25_idf(n_docs: int, df: int) -> float:
    # ln(1 + ...) keeps idf >= 0 for every df in [0, n_docs]
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


@dataclass(frozen=True)
class Bm25Index:
    postings: Mapping[str, tuple[tuple[str, int], ...]]
    doc_len: Mapping[str, int]
    avgdl: float
    n_docs: int
    k1: float = 1.5
    b: float = 0.75

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        return bm25_idf(self.n_docs, self.df(term))

    @property
    def doc_ids(self) -> list[str]:
        return list(self.doc_len)


def build_bm25(docs: Iterable[tuple[str, Sequence[str]]], k1: float = 1.5,
               b: float = 0.75) -> Bm25Index:
    doc_len: dict[str, int] = {}
    postings: dict[str, list[tuple[str, int]]] = {}
    for doc_id, tokens in docs:
        if doc_id in doc_len:
            raise DataError(f"duplicate doc_id {doc_id!r}")
        doc_len[doc_id] = len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, []).append((doc_id, tf))
    if not doc_len:
        raise DataError("cannot build a BM25 index over an empty corpus")
    avgdl = sum(doc_len.values()) / len(doc_len)
    frozen = {t: tuple(p) for t, p in postings.items()}
    return Bm25Index(frozen, doc_len, avgdl, len(doc_len), k1, b)


def bm25_scores(index: Bm25Index, query: Sequence[str]) -> dict[str, float]:
    """Okapi score of every indexed document; repeated query terms count again."""
    scores = dict.fromkeys(index.doc_len, 0.0)
    k1, b = index.k1, index.b
    # avgdl is 0 only when every document is empty, in which case no term posts
    avgdl = index.avgdl or 1.0
    for term in query:
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = bm25_idf(index.n_docs, len(plist))
        for doc_id, tf in plist:
            norm = k1 * (1.0 - b + b * index.doc_len[doc_id] / avgdl)
            scores[doc_id] += idf * tf * (k1 + 1.0) / (tf + norm)
    return scores


def rank_scores(scores: Mapping[str, float]) -> list[tuple[str, float]]:
    """Descending by score, ties by ascending id."""
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def top_k(index: Bm25Index, query: Sequence[str], k: int = 100) -> list[tuple[str, float]]:
    if k < 1:
        raise DataError(f"k must be positive, got {k}")
    return rank_scores(bm25_scores(index, query))[:k]


def save_index(index: Bm25Index, path: str | Path) -> None:
    for doc_id in index.doc_len:
        if any(c in doc_id for c in "\t\n,") or not doc_id:
            raise DataError(f"doc_id {doc_id!r} cannot be stored in the index file")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{FORMAT_TAG} {index.k1!r} {index.b!r} {index.n_docs} {index.avgdl!r}\n")
        for term in sorted(index.postings):
            plist = ",".join(f"{d}:{tf}" for d, tf in index.postings[term])
            fh.write(f"{term}\t{plist}\n")
        fh.write("DOCS\n")
        for doc_id, n in index.doc_len.items():
            fh.write(f"{doc_id}\t{n}\n")


def load_index(path: str | Path) -> Bm25Index:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataError(f"{path.name}: empty index file")
    head = lines[0].split(" ")
    if len(head) != 5 or head[0] != FORMAT_TAG:
        raise DataError(f"{path.name}:1: expected '{FORMAT_TAG} <k1> <b> <n_docs> <avgdl>'")
    try:
        k1, b, n_docs, avgdl = float(head[1]), float(head[2]), int(head[3]), float(head[4])
    except ValueError:
        raise DataError(f"{path.name}:1: non-numeric header field") from None
    postings: dict[str, tuple[tuple[str, int], ...]] = {}
    doc_len: dict[str, int] = {}
    section = "terms"
    for lineno, line in enumerate(lines[1:], 2):
        if section == "terms" and line == "DOCS":
            section = "docs"
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise DataError(f"{path.name}:{lineno}: expected 2 tab-separated columns")
        try:
            if section == "terms":
                entries = []
                for item in cols[1].split(","):
                    doc_id, tf = item.rsplit(":", 1)
                    entries.append((doc_id, int(tf)))
                postings[cols[0]] = tuple(entries)
            else:
                doc_len[cols[0]] = int(cols[1])
        except ValueError:
            raise DataError(f"{path.name}:{lineno}: malformed entry") from None
    if section != "docs" or len(doc_len) != n_docs:
        raise DataError(f"{path.name}: DOCS section missing or inconsistent with header")
    for term, plist in postings.items():
        for doc_id, tf in plist:
            if doc_id not in doc_len or tf < 1:
                raise DataError(f"{path.name}: bad posting {doc_id}:{tf} for term {term!r}")
    return Bm25Index(postings, doc_len, avgdl, n_docs, k1, b)


def compute_idf(docs: Iterable[Sequence[str]]) -> dict[str, float]:
    """Smoothed idf, ln((1 + N) / (1 + df)) + 1, always >= 1."""
    df: Counter[str] = Counter()
    n = 0
    for tokens in docs:
        n += 1
        df.update(set(tokens))
    return {t: math.log((1 + n) / (1 + c)) + 1.0 for t, c in df.items()}


def tfidf_vector(tokens: Sequence[str], idf: Mapping[str, float]) -> dict[str, float]:
    """L2-normalized tf*idf weights; terms missing from ``idf`` get weight 0."""
    raw = {t: tf * idf.get(t, 0.0) for t, tf in Counter(tokens).items()}
    if any(w < 0 for w in raw.values()):
        raise DataError("idf weights must be non-negative")
    raw = {t: w for t, w in raw.items() if w > 0}
    norm = math.sqrt(sum(w * w for w in raw.values()))
    if norm == 0:
        return {}
    return {t: w / norm for t, w in raw.items()}


def sparse_dot(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    if len(u) > len(v):
        u, v = v, u
    return sum(w * v[t] for t, w in u.items() if t in v)


def tfidf_cosine(a: Sequence[str], b: Sequence[str], idf: Mapping[str, float]) -> float:
    va, vb = tfidf_vector(a, idf), tfidf_vector(b, idf)
    if not va or not vb:
        return 0.0
    if va == vb:
        return 1.0
    return min(1.0, max(0.0, sparse_dot(va, vb)))
