"""Macro precision/recall, F-beta and accuracy."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

from .errors import DataError


@dataclass(frozen=True)
class MetricsReport:
    p_macro: float
    r_macro: float
    f2: float
    f1: float
    return_count: int
    retrieved_count: int
    accuracy: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


def macro_pr(predictions: Mapping[str, set[str]], gold: Mapping[str, set[str]]) -> tuple[float, float]:
    """Unweighted means over gold queries; an empty prediction scores P = R = 0."""
    unknown = sorted(set(predictions) - set(gold))
    if unknown:
        raise DataError(f"predictions for queries without gold: {unknown[:5]}")
    if not gold:
        raise DataError("gold set is empty")
    p_sum = r_sum = 0.0
    for q in sorted(gold):
        g = set(gold[q])
        if not g:
            raise DataError(f"gold query {q!r} has no relevant ids")
        pred = set(predictions.get(q, ()))
        hit = len(pred & g)
        p_sum += hit / len(pred) if pred else 0.0
        r_sum += hit / len(g)
    return p_sum / len(gold), r_sum / len(gold)


def f_beta(p: float, r: float, beta: float = 2.0) -> float:
    b2 = beta * beta
    denom = b2 * p + r
    if denom == 0:
        return 0.0
    return (1 + b2) * p * r / denom


def accuracy(predictions: Sequence[bool], gold: Sequence[bool]) -> float:
    if len(predictions) != len(gold):
        raise DataError(f"length mismatch: {len(predictions)} predictions, {len(gold)} gold labels")
    if not gold:
        raise DataError("accuracy of an empty label list is undefined")
    return sum(bool(a) == bool(b) for a, b in zip(predictions, gold)) / len(gold)


def evaluate(predictions: Mapping[str, set[str]], gold: Mapping[str, set[str]],
             acc: float | None = None) -> MetricsReport:
    p, r = macro_pr(predictions, gold)
    returned = sum(len(set(v)) for v in predictions.values())
    retrieved = sum(len(set(v) & set(gold[q])) for q, v in predictions.items())
    return MetricsReport(p, r, f_beta(p, r, 2.0), f_beta(p, r, 1.0), returned, retrieved, acc)
