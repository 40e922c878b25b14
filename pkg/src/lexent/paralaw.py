"""Cross-lingual next/neighbour sentence samples from aligned bilingual documents.

Each adjacency (p_i, p_next) plus a distractor pair yields twelve samples:
four reversed (NMSP 2), four in order (NMSP 1), four with a random second
sentence (NMSP 0). Only the cross-lingual in-order and random samples carry
an NFSP label.
"""

from __future__ import annotations

import bisect
import csv
import json
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import DataError

NMSP_RANDOM, NMSP_NEXT, NMSP_PREVIOUS = 0, 1, 2


@dataclass(frozen=True)
class AlignedPair:
    pos: int
    text_a: str
    text_b: str


@dataclass(frozen=True)
class ParallelDoc:
    id: str
    pairs: tuple[AlignedPair, ...]

    def __post_init__(self):
        for i, p in enumerate(self.pairs):
            if p.pos != i:
                raise DataError(f"{self.id}: aligned positions must be consecutive from 0")
            if not p.text_a or not p.text_b:
                raise DataError(f"{self.id}:{p.pos}: aligned texts must be non-empty")


@dataclass(frozen=True)
class NspSample:
    first: str
    first_lang: str
    second: str
    second_lang: str
    nmsp: int
    nfsp: int | None = None

    def __post_init__(self):
        cross = self.first_lang != self.second_lang
        if (self.nfsp is not None) != (cross and self.nmsp in (0, 1)):
            raise DataError(f"nfsp label presence inconsistent for {self}")
        if self.nfsp is not None and (self.nfsp == 1) != (self.nmsp == 1):
            raise DataError(f"nfsp/nmsp labels disagree for {self}")

    def to_json(self) -> dict:
        return {"first": self.first, "first_lang": self.first_lang,
                "second": self.second, "second_lang": self.second_lang,
                "nfsp": self.nfsp, "nmsp": self.nmsp}


def generate_samples(p_i: AlignedPair, p_next: AlignedPair, random_pair: AlignedPair,
                     lang_a: str = "en", lang_b: str = "ja") -> list[NspSample]:
    if (random_pair.text_a, random_pair.text_b) == (p_next.text_a, p_next.text_b):
        raise DataError("random pair is identical to the true next pair")
    if (random_pair.text_a, random_pair.text_b) == (p_i.text_a, p_i.text_b):
        raise DataError("random pair is identical to the anchor pair")
    a1, b1 = (p_i.text_a, lang_a), (p_i.text_b, lang_b)
    a2, b2 = (p_next.text_a, lang_a), (p_next.text_b, lang_b)
    ar, br = (random_pair.text_a, lang_a), (random_pair.text_b, lang_b)
    rows = [
        (a2, a1, NMSP_PREVIOUS, None),
        (b2, b1, NMSP_PREVIOUS, None),
        (b2, a1, NMSP_PREVIOUS, None),
        (a2, b1, NMSP_PREVIOUS, None),
        (b1, b2, NMSP_NEXT, None),
        (a1, a2, NMSP_NEXT, None),
        (a1, b2, NMSP_NEXT, 1),
        (b1, a2, NMSP_NEXT, 1),
        (a1, br, NMSP_RANDOM, 0),
        (b1, ar, NMSP_RANDOM, 0),
        (a1, ar, NMSP_RANDOM, None),
        (b1, br, NMSP_RANDOM, None),
    ]
    return [NspSample(f[0], f[1], s[0], s[1], nmsp, nfsp) for f, s, nmsp, nfsp in rows]


def _draw_distractor(rng: random.Random, corpus: Sequence[ParallelDoc], doc_idx: int,
                     i: int, other_total: int, offsets: list[int]) -> AlignedPair:
    doc = corpus[doc_idx]
    anchor = {(doc.pairs[i].text_a, doc.pairs[i].text_b),
              (doc.pairs[i + 1].text_a, doc.pairs[i + 1].text_b)}
    for _ in range(100):
        if other_total:
            r = rng.randrange(other_total)
            # skip the current document's block
            if r >= offsets[doc_idx]:
                r += len(doc.pairs)
            j = bisect.bisect_right(offsets, r) - 1
            cand = corpus[j].pairs[r - offsets[j]]
        else:
            # single-document corpus: fall back to non-adjacent positions
            choices = [k for k in range(len(doc.pairs)) if k not in (i, i + 1)]
            if not choices:
                break
            cand = doc.pairs[rng.choice(choices)]
        if (cand.text_a, cand.text_b) not in anchor:
            return cand
    raise DataError(f"{doc.id}:{i}: no usable distractor pair")


def build_dataset(corpus: Sequence[ParallelDoc], seed: int = 0, lang_a: str = "en",
                  lang_b: str = "ja") -> list[NspSample]:
    """Twelve samples per adjacent aligned pair, shuffled deterministically."""
    if not any(len(d.pairs) >= 2 for d in corpus):
        raise DataError("corpus has no adjacent aligned pairs")
    rng = random.Random(seed)
    offsets, total = [], 0
    for d in corpus:
        offsets.append(total)
        total += len(d.pairs)
    samples: list[NspSample] = []
    for di, doc in enumerate(corpus):
        other_total = total - len(doc.pairs)
        for i in range(len(doc.pairs) - 1):
            distractor = _draw_distractor(rng, corpus, di, i, other_total, offsets)
            samples.extend(generate_samples(doc.pairs[i], doc.pairs[i + 1], distractor, lang_a, lang_b))
    rng.shuffle(samples)
    return samples


def split(samples: Sequence, ratio: tuple[int, int] = (9, 1), seed: int = 0) -> tuple[list, list]:
    """Shuffled train/validation split with ``|train| = round(n * a / (a + b))``, half up."""
    n = len(samples)
    if n < 10:
        raise DataError(f"need at least 10 samples to split, got {n}")
    a, b = ratio
    if a < 0 or b < 0 or a + b == 0:
        raise DataError(f"bad split ratio {ratio}")
    n_train = (2 * n * a + (a + b)) // (2 * (a + b))
    order = list(range(n))
    random.Random(seed).shuffle(order)
    train = [samples[k] for k in order[:n_train]]
    valid = [samples[k] for k in order[n_train:]]
    return train, valid


def read_parallel_tsv(path: str | Path) -> list[ParallelDoc]:
    """Columns: doc_id, pos, text_a, text_b. A header row is skipped if present."""
    path = Path(path)
    rows: dict[str, list[AlignedPair]] = defaultdict(list)
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, cols in enumerate(csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE), 1):
            if not cols or (lineno == 1 and cols[:2] == ["doc_id", "pos"]):
                continue
            if len(cols) != 4:
                raise DataError(f"{path.name}:{lineno}: expected 4 columns, got {len(cols)}")
            try:
                pos = int(cols[1])
            except ValueError:
                raise DataError(f"{path.name}:{lineno}: non-integer pos {cols[1]!r}") from None
            rows[cols[0]].append(AlignedPair(pos, cols[2], cols[3]))
    docs = []
    for doc_id in sorted(rows):
        pairs = tuple(sorted(rows[doc_id], key=lambda p: p.pos))
        docs.append(ParallelDoc(doc_id, pairs))
    return docs


def write_samples(samples: Sequence[NspSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")
