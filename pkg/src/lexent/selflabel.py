"""Train, predict, demote suspicious positives, retrain.

Only positive labels may change (to negative); a negative is never promoted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .errors import DataError
from .pairs import LabeledPair
from .scorer import DEFAULT_DIM, LogRegModel, Stage, TrainSchedule, featurize, train


@dataclass(frozen=True)
class SelfLabelConfig:
    e1: int = 2
    e2: int = 10
    decision_threshold: float = 0.5
    learning_rate: float = 0.1
    rounds: int = 1

    def __post_init__(self):
        if self.e1 < 0 or self.e2 < 0:
            raise DataError("e1 and e2 must be >= 0")
        if self.rounds < 1:
            raise DataError("rounds must be >= 1")


@dataclass
class SelfLabelResult:
    model: LogRegModel
    labels: list[bool]
    flipped: list[int]
    # probabilities from the model that drove the (last) relabel pass
    predictions: list[float]


def relabel(labels: Sequence[bool], predicted: Sequence[bool]) -> tuple[list[bool], list[int]]:
    """Demote positives predicted negative; returns new labels and flipped indices."""
    if len(labels) != len(predicted):
        raise DataError("label and prediction lengths differ")
    out = list(labels)
    flipped = []
    for i, (y, yhat) in enumerate(zip(labels, predicted)):
        if y and not yhat:
            out[i] = False
            flipped.append(i)
    return out, flipped


def run_self_label(pairs: Sequence[LabeledPair], y0: Sequence[bool] | None = None,
                   config: SelfLabelConfig = SelfLabelConfig(), seed: int = 0,
                   dim: int = DEFAULT_DIM) -> SelfLabelResult:
    if not pairs:
        raise DataError("self-labelling needs at least one pair")
    labels = [p.label for p in pairs] if y0 is None else [bool(v) for v in y0]
    if len(labels) != len(pairs):
        raise DataError(f"{len(pairs)} pairs but {len(labels)} labels")
    dataset = [replace(p, label=y) for p, y in zip(pairs, labels)]
    model = train(TrainSchedule((Stage(dataset, config.e1, config.learning_rate),)), seed, dim)
    feats = [featurize(p.text_a, p.text_b, model.dim) for p in pairs]
    flipped_all: list[int] = []
    probs: list[float] = []
    for r in range(config.rounds):
        probs = [model.predict_proba(x) for x in feats]
        labels, flipped = relabel(labels, [p >= config.decision_threshold for p in probs])
        flipped_all.extend(flipped)
        dataset = [replace(p, label=y) for p, y in zip(pairs, labels)]
        # continue the same model; a fresh shuffle stream per round
        model = train(TrainSchedule((Stage(dataset, config.e2, config.learning_rate),)),
                      seed + r + 1, init=model)
    return SelfLabelResult(model, labels, sorted(flipped_all), probs)


def write_flip_report(flipped: Sequence[int], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in flipped:
            fh.write(json.dumps({"index": i, "old": True, "new": False}) + "\n")
