"""Lexical/semantic score-matrix fusion, case-level ranking, result-set
selection and simplex-grid ensembling."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Document
from .errors import DataError
from .lexical import Bm25Index, bm25_scores, build_bm25, tokenize
from .metrics import f_beta, macro_pr
from .scorer import score_matrix

AGGREGATIONS = ("max", "mean_row_max")
STRATEGIES = ("top1", "topk", "relative_threshold")


@dataclass(frozen=True)
class FusionConfig:
    # weight of the semantic (supporting) score; the lexical side gets 1 - w_sem
    w_sem: float = 0.3
    aggregation: str = "mean_row_max"
    normalize_lex: bool = True

    def __post_init__(self):
        if not 0.0 <= self.w_sem <= 1.0:
            raise DataError(f"w_sem must lie in [0, 1], got {self.w_sem}")
        if self.aggregation not in AGGREGATIONS:
            raise DataError(f"unknown aggregation {self.aggregation!r}")


@dataclass
class ScoreMatrixPair:
    query_id: str
    cand_id: str
    lex: np.ndarray
    sem: np.ndarray
    fused: np.ndarray | None = None

    def __post_init__(self):
        self.lex = np.asarray(self.lex, dtype=np.float64)
        self.sem = np.asarray(self.sem, dtype=np.float64)
        if self.lex.ndim != 2 or self.lex.shape != self.sem.shape:
            raise DataError(f"{self.query_id}/{self.cand_id}: lexical {self.lex.shape} "
                            f"and semantic {self.sem.shape} matrices differ in shape")
        if (self.lex < 0).any():
            raise DataError(f"{self.query_id}/{self.cand_id}: negative lexical score")
        if ((self.sem < 0) | (self.sem > 1)).any():
            raise DataError(f"{self.query_id}/{self.cand_id}: semantic score outside [0, 1]")


def minmax(m: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant matrix maps to zeros."""
    lo, hi = m.min(), m.max()
    if hi == lo:
        return np.zeros_like(m, dtype=np.float64)
    return (m - lo) / (hi - lo)


def union(pair: ScoreMatrixPair, config: FusionConfig) -> np.ndarray:
    lex = minmax(pair.lex) if config.normalize_lex else pair.lex
    return config.w_sem * pair.sem + (1.0 - config.w_sem) * lex


def aggregate(matrix: np.ndarray, method: str = "mean_row_max") -> float:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise DataError("cannot aggregate an empty matrix")
    if method == "max":
        return float(m.max())
    if method == "mean_row_max":
        return float(m.max(axis=1).mean())
    raise DataError(f"unknown aggregation {method!r}")


def paragraph_id(doc_id: str, index: int) -> str:
    return f"{doc_id}#{index}"


def build_paragraph_index(docs: Sequence[Document], k1: float = 1.5, b: float = 0.75) -> Bm25Index:
    """BM25 over every paragraph of ``docs``, keyed ``<doc_id>#<index>``."""
    entries = [(paragraph_id(d.id, p.index), tokenize(p.text)) for d in docs for p in d.paragraphs]
    return build_bm25(entries, k1, b)


def lexical_matrix(query: Document, cand: Document, index: Bm25Index,
                   _cache: dict | None = None) -> np.ndarray:
    rows = []
    for p in query.paragraphs:
        key = (query.id, p.index)
        if _cache is not None and key in _cache:
            scores = _cache[key]
        else:
            scores = bm25_scores(index, tokenize(p.text))
            if _cache is not None:
                _cache[key] = scores
        rows.append([scores.get(paragraph_id(cand.id, c.index), 0.0) for c in cand.paragraphs])
    return np.array(rows, dtype=np.float64)


def rank(query: Document, candidates: Sequence[Document], config: FusionConfig, backend,
         index: Bm25Index | None = None, keep: list | None = None) -> list[tuple[str, float]]:
    """Fused case-level scores, descending, ties by ascending candidate id.

    ``index`` is a paragraph-level BM25 index (see ``build_paragraph_index``);
    built over the candidates when omitted. Pass a list as ``keep`` to collect
    the per-candidate ScoreMatrixPair objects.
    """
    if not query.paragraphs:
        raise DataError(f"query {query.id!r} has no paragraphs")
    if index is None:
        index = build_paragraph_index(candidates)
    q_texts = [p.text for p in query.paragraphs]
    cache: dict = {}
    scored = []
    for cand in candidates:
        if not cand.paragraphs:
            continue
        lex = lexical_matrix(query, cand, index, cache)
        if config.w_sem > 0:
            sem = score_matrix(backend, q_texts, [p.text for p in cand.paragraphs])
        else:
            sem = np.zeros_like(lex)
        pair = ScoreMatrixPair(query.id, cand.id, lex, sem)
        pair.fused = union(pair, config)
        if keep is not None:
            keep.append(pair)
        scored.append((cand.id, aggregate(pair.fused, config.aggregation)))
    return sorted(scored, key=lambda kv: (-kv[1], kv[0]))


def decide(ranked: Sequence[tuple[str, float]], strategy: str = "relative_threshold",
           k: int = 5, beta: float = 0.9) -> list[str]:
    """Select the result set from a ranked list (best first)."""
    if not ranked:
        raise DataError("cannot decide on an empty ranking")
    if strategy == "top1":
        return [ranked[0][0]]
    if strategy == "topk":
        if k < 1:
            raise DataError("k must be positive")
        return [cid for cid, _ in ranked[:k]]
    if strategy == "relative_threshold":
        top = ranked[0][1]
        # equals beta * top for top >= 0 and still admits the leader when top < 0
        cut = top - (1.0 - beta) * abs(top)
        return [cid for cid, s in ranked if s >= cut]
    raise DataError(f"unknown decision strategy {strategy!r}")


@dataclass(frozen=True)
class EnsembleWeights:
    weights: dict[str, float]
    metric: float = float("nan")

    def __post_init__(self):
        if any(w < 0 for w in self.weights.values()):
            raise DataError("ensemble weights must be non-negative")
        if abs(sum(self.weights.values()) - 1.0) > 1e-9:
            raise DataError("ensemble weights must sum to 1")


def _normalized_runs(model_scores: Mapping[str, Mapping[str, Sequence[tuple[str, float]]]]):
    out = {}
    for mid, per_query in model_scores.items():
        out[mid] = {}
        for qid, ranked in per_query.items():
            ids = [c for c, _ in ranked]
            vals = minmax(np.array([s for _, s in ranked], dtype=np.float64)) if ranked else []
            out[mid][qid] = dict(zip(ids, (float(v) for v in vals)))
    return out


def combine(model_scores, weights: Mapping[str, float], normalize: bool = True) -> dict[str, list[tuple[str, float]]]:
    """Weighted sum of per-query scores; a candidate missing from a model scores 0 there."""
    runs = _normalized_runs(model_scores) if normalize else {
        m: {q: dict(r) for q, r in pq.items()} for m, pq in model_scores.items()}
    queries = sorted({q for pq in runs.values() for q in pq})
    out = {}
    for q in queries:
        acc: dict[str, float] = {}
        for mid, w in weights.items():
            for cid, s in runs[mid].get(q, {}).items():
                acc[cid] = acc.get(cid, 0.0) + w * s
        out[q] = sorted(acc.items(), key=lambda kv: (-kv[1], kv[0]))
    return out


def _simplex(k: int, steps: int):
    for cut in itertools.combinations(range(steps + k - 1), k - 1):
        parts, prev = [], -1
        for c in cut:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + k - 2 - prev)
        yield tuple(p / steps for p in parts)


def learn_ensemble(model_scores: Mapping[str, Mapping[str, Sequence[tuple[str, float]]]],
                   dev_gold: Mapping[str, set[str]], strategy: str = "relative_threshold",
                   k: int = 5, beta_decide: float = 0.9, beta_metric: float = 2.0,
                   step: float = 0.1, normalize: bool = True) -> EnsembleWeights:
    """Grid search over the weight simplex maximizing macro F-beta after ``decide``.

    Models are ordered as given. Among equally good weight vectors the one
    that is lexicographically largest in that order wins, so identical models
    resolve to all weight on the first.
    """
    if not model_scores:
        raise DataError("learn_ensemble needs at least one model")
    if not dev_gold:
        raise DataError("learn_ensemble needs a non-empty dev gold set")
    mids = list(model_scores)
    steps = round(1 / step)
    if abs(steps * step - 1) > 1e-9:
        raise DataError("step must divide 1")
    best: tuple[float, tuple] | None = None
    for vec in _simplex(len(mids), steps):
        fused = combine(model_scores, dict(zip(mids, vec)), normalize)
        preds = {q: set(decide(r, strategy, k, beta_decide)) if r else set()
                 for q, r in fused.items() if q in dev_gold}
        p, r = macro_pr(preds, dev_gold)
        score = f_beta(p, r, beta_metric)
        if best is None or (score, vec) > best:
            best = (score, vec)
    return EnsembleWeights(dict(zip(mids, best[1])), best[0])


def write_matrix(matrix: np.ndarray, path: str | Path) -> None:
    m = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"MAT {m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_matrix(path: str | Path) -> np.ndarray:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    try:
        tag, n, m = lines[0].split()
        n, m = int(n), int(m)
        if tag != "MAT":
            raise ValueError
    except (IndexError, ValueError):
        raise DataError(f"{path.name}:1: expected 'MAT <N> <M>'") from None
    rows = [ln for ln in lines[1:] if ln.strip()]
    if len(rows) != n:
        raise DataError(f"{path.name}: header says {n} rows, found {len(rows)}")
    out = np.empty((n, m), dtype=np.float64)
    for i, ln in enumerate(rows):
        vals = ln.split()
        if len(vals) != m:
            raise DataError(f"{path.name}:{i + 2}: expected {m} values, found {len(vals)}")
        try:
            out[i] = [float(v) for v in vals]
        except ValueError:
            raise DataError(f"{path.name}:{i + 2}: non-numeric value") from None
    return out
