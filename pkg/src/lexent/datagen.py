"""Training-pair construction: capped negatives, tf-idf augmentation,
negation rules, and silver supporting pairs from case law."""

from __future__ import annotations

import bisect
import json
import random
import re
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Document
from .errors import DataError
from .lexical import compute_idf, sparse_dot, tfidf_vector, tokenize
from .pairs import LabeledPair

LANGUAGES = ("english", "japanese")


@dataclass(frozen=True)
class NegationRule:
    """Literal pattern; a leading/trailing ``\\b`` marks a word boundary."""

    priority: int
    language: str
    pattern: str
    replacement: str

    def __post_init__(self):
        if self.language not in LANGUAGES:
            raise DataError(f"unknown rule language {self.language!r}")
        if not self.pattern or self.pattern in ("\\b", "\\b\\b"):
            raise DataError("negation pattern must be non-empty")

    @cached_property
    def regex(self) -> re.Pattern:
        body = self.pattern
        left = body.startswith("\\b")
        right = body.endswith("\\b") and len(body) > 2
        if left:
            body = body[2:]
        if right:
            body = body[:-2]
        return re.compile(("\\b" if left else "") + re.escape(body) + ("\\b" if right else ""))


def load_rules(path: str | Path | None = None, language: str | None = None) -> list[NegationRule]:
    """Rules sorted by priority; ``path=None`` loads the bundled rule file."""
    if path is None:
        text = resources.files("lexent").joinpath("data", "negation_rules.jsonl").read_text(encoding="utf-8")
        name = "negation_rules.jsonl"
    else:
        text = Path(path).read_text(encoding="utf-8")
        name = Path(path).name
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            rule = NegationRule(int(rec["priority"]), rec["language"], rec["pattern"], rec["replacement"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DataError(f"{name}:{lineno}: bad rule ({e})") from None
        if language is None or rule.language == language:
            rules.append(rule)
    seen = set()
    for r in rules:
        if (r.language, r.priority) in seen:
            raise DataError(f"{name}: duplicate priority {r.priority} for {r.language}")
        seen.add((r.language, r.priority))
    return sorted(rules, key=lambda r: (r.language, r.priority))


def negate(text: str, rules: Sequence[NegationRule]) -> tuple[str, int] | None:
    """Apply the first matching rule once, at its leftmost match."""
    for rule in rules:
        m = rule.regex.search(text)
        if m is None:
            continue
        out = text[:m.start()] + rule.replacement + text[m.end():]
        if m.start() == 0 and text[:1].isupper() and out[:1].islower():
            out = out[0].upper() + out[1:]
        return out, rule.priority
    return None


def _ranked_by_similarity(query_tokens, articles: Sequence[Document], vectors, idf,
                          exclude: set[str]) -> list[Document]:
    qv = tfidf_vector(query_tokens, idf)
    scored = []
    for a, av in zip(articles, vectors):
        if a.id in exclude:
            continue
        sim = sparse_dot(qv, av) if qv else 0.0
        scored.append((-sim, a.id, a))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [a for _, _, a in scored]


def article_idf(articles: Sequence[Document]) -> dict[str, float]:
    return compute_idf(tokenize(a.text) for a in articles)


def build_retrieval_pairs(questions: Sequence[Document], articles: Sequence[Document],
                          annotations: Mapping[str, Sequence[str]], idf=None,
                          cap: int = 150) -> list[LabeledPair]:
    """All annotated positives plus at most ``cap`` tf-idf-nearest negatives per question."""
    if cap < 0:
        raise DataError("cap must be non-negative")
    by_id = {a.id: a for a in articles}
    idf = article_idf(articles) if idf is None else idf
    vectors = [tfidf_vector(tokenize(a.text), idf) for a in articles]
    out = []
    for q in questions:
        positive_ids = list(annotations.get(q.id, ()))
        if not positive_ids:
            raise DataError(f"question {q.id!r} has no annotated positive article")
        for pid in positive_ids:
            if pid not in by_id:
                raise DataError(f"question {q.id!r}: unknown article {pid!r}")
            out.append(LabeledPair(q.id, q.text, by_id[pid].text, True, "gold", article_id=pid))
        ranked = _ranked_by_similarity(tokenize(q.text), articles, vectors, idf, set(positive_ids))
        for a in ranked[:cap]:
            out.append(LabeledPair(q.id, q.text, a.text, False, "gold", article_id=a.id))
    return out


def augment_relevant(question: str, gold: Sequence[Document], pool: Sequence[Document],
                     n: int, idf=None) -> list[Document]:
    """Gold articles followed by the ``n`` most tf-idf-similar pool articles."""
    if n < 0:
        raise DataError("n must be non-negative")
    gold = list(gold)
    if n == 0:
        return gold
    if idf is None:
        idf = article_idf(list(pool) + gold)
    vectors = [tfidf_vector(tokenize(a.text), idf) for a in pool]
    ranked = _ranked_by_similarity(tokenize(question), pool, vectors, idf, {g.id for g in gold})
    seen = set()
    extra = []
    for a in ranked:
        if a.id not in seen:
            seen.add(a.id)
            extra.append(a)
        if len(extra) == n:
            break
    return gold + extra


def build_silver_supporting(cases: Sequence[Document], neg_ratio: float = 1.0, seed: int = 0,
                            sample_rate: float = 1.0) -> list[LabeledPair]:
    """Consecutive-sentence positives with cross-case random negatives.

    ``neg_ratio`` negatives per positive; a fractional part is realized as a
    Bernoulli draw. ``sample_rate`` keeps each positive with that probability.
    """
    if neg_ratio < 0 or not 0 <= sample_rate <= 1:
        raise DataError("neg_ratio must be >= 0 and sample_rate in [0, 1]")
    rng = random.Random(seed)
    # flat sentence pool, contiguous per case
    pool: list[str] = []
    spans: dict[str, tuple[int, int]] = {}
    for c in cases:
        start = len(pool)
        pool.extend(c.sentences())
        spans[c.id] = (start, len(pool))
    starts = [spans[c.id][0] for c in cases]
    whole, frac = int(neg_ratio), neg_ratio - int(neg_ratio)

    out = []
    for c in cases:
        lo, hi = spans[c.id]
        foreign = len(pool) - (hi - lo)
        for p in c.paragraphs:
            for j in range(len(p.sentences) - 1):
                if sample_rate < 1 and rng.random() >= sample_rate:
                    continue
                first = p.sentences[j]
                qid = f"{c.id}:{p.index}:{j}"
                out.append(LabeledPair(qid, first, p.sentences[j + 1], True, "silver", article_id=c.id))
                k = whole + (1 if frac and rng.random() < frac else 0)
                if foreign == 0:
                    continue
                for _ in range(k):
                    r = rng.randrange(foreign)
                    if r >= lo:
                        r += hi - lo
                    out.append(LabeledPair(qid, first, pool[r], False, "silver",
                                           article_id=cases[_owner(starts, r)].id))
    return out


def _owner(starts: Sequence[int], idx: int) -> int:
    # rightmost case whose block starts at or before idx; empty cases share a start
    return bisect.bisect_right(starts, idx) - 1
