"""Pair scorers: a hashed-feature logistic regression trained by SGD, and a
bridge to an external scoring process speaking JSON lines."""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import shlex
import socket
import subprocess
import threading
import zipfile
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, ScorerError
from .lexical import tokenize
from .pairs import LabeledPair, read_pairs

DEFAULT_DIM = 2 ** 20
ENV_SCORER = "LEXENT_SCORER"
_Z_CLIP = 35.0  # keeps sigmoid strictly inside (0, 1) in float64


# --------------------------------------------------------------------------
# features


def feature_counts(text_a: str, text_b: str) -> Counter:
    """Namespaced term counts: ``a:`` and ``b:`` per side, ``x:`` for shared terms."""
    ta, tb = Counter(tokenize(text_a)), Counter(tokenize(text_b))
    feats: Counter = Counter()
    for t, c in ta.items():
        feats["a:" + t] += c
    for t, c in tb.items():
        feats["b:" + t] += c
    for t in ta.keys() & tb.keys():
        feats["x:" + t] += min(ta[t], tb[t])
    return feats


@lru_cache(maxsize=1 << 16)
def _bucket(name: str, dim: int) -> int:
    h = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(h, "little") & (dim - 1)


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray

    def dot(self, dense: np.ndarray) -> float:
        return float(dense[self.indices] @ self.values) if len(self.indices) else 0.0


def featurize(text_a: str, text_b: str, dim: int = DEFAULT_DIM) -> SparseVector:
    if dim < 1 or dim & (dim - 1):
        raise DataError(f"feature dimension must be a power of two, got {dim}")
    acc: dict[int, float] = {}
    for name, c in feature_counts(text_a, text_b).items():
        k = _bucket(name, dim)
        acc[k] = acc.get(k, 0.0) + c
    idx = np.array(sorted(acc), dtype=np.int64)
    vals = np.array([acc[k] for k in idx], dtype=np.float64)
    norm = np.linalg.norm(vals)
    if norm > 0:
        vals = vals / norm
    return SparseVector(idx, vals)


# --------------------------------------------------------------------------
# model


def sigmoid(z: float) -> float:
    z = min(_Z_CLIP, max(-_Z_CLIP, z))
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@dataclass
class LogRegModel:
    dim: int = DEFAULT_DIM
    weights: np.ndarray | None = None
    bias: float = 0.0
    seed: int = 0
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.weights is None:
            self.weights = np.zeros(self.dim, dtype=np.float64)
        if self.weights.shape != (self.dim,):
            raise DataError(f"weight vector has shape {self.weights.shape}, expected ({self.dim},)")

    def margin(self, x: SparseVector) -> float:
        return x.dot(self.weights) + self.bias

    def predict_proba(self, x: SparseVector) -> float:
        return sigmoid(self.margin(x))

    def copy(self) -> "LogRegModel":
        return LogRegModel(self.dim, self.weights.copy(), self.bias, self.seed, list(self.history))

    def save(self, path: str | Path) -> None:
        """npz archive of the nonzero weights; fixed entry timestamps keep it byte-stable."""
        nz = np.flatnonzero(self.weights)
        arrays = {"dim": np.array(self.dim), "bias": np.array(self.bias), "seed": np.array(self.seed),
                  "indices": nz, "values": self.weights[nz],
                  "history": np.array(self.history, dtype=np.float64)}
        with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
            for name, arr in arrays.items():
                with zf.open(zipfile.ZipInfo(name + ".npy", (1980, 1, 1, 0, 0, 0)), "w") as fh:
                    np.lib.format.write_array(fh, np.asarray(arr), allow_pickle=False)

    @classmethod
    def load(cls, path: str | Path) -> "LogRegModel":
        try:
            with np.load(path, allow_pickle=False) as z:
                dim = int(z["dim"])
                w = np.zeros(dim, dtype=np.float64)
                w[z["indices"]] = z["values"]
                return cls(dim, w, float(z["bias"]), int(z["seed"]), z["history"].tolist())
        except (OSError, KeyError, ValueError, zipfile.BadZipFile) as e:
            raise DataError(f"{path}: not a model file ({e})") from None


def _prob(z: float) -> float:
    # unclipped; exact derivative of logaddexp(0, z)
    return 0.5 * (1.0 + math.tanh(0.5 * z))


def logistic_loss(model: LogRegModel, x: SparseVector, y: float, weight: float = 1.0) -> float:
    z = x.dot(model.weights) + model.bias
    return weight * (float(np.logaddexp(0.0, z)) - y * z)


def logistic_grad(model: LogRegModel, x: SparseVector, y: float,
                  weight: float = 1.0) -> tuple[np.ndarray, float]:
    """Gradient of ``logistic_loss`` w.r.t. the weights at ``x.indices``, and the bias."""
    z = x.dot(model.weights) + model.bias
    g = weight * (_prob(z) - y)
    return g * x.values, g


@dataclass(frozen=True)
class Stage:
    dataset: Sequence[LabeledPair] | str | Path
    epochs: int = 1
    learning_rate: float = 0.1

    def __post_init__(self):
        if self.epochs < 0:
            raise DataError("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise DataError("learning_rate must be positive")

    def pairs(self) -> Sequence[LabeledPair]:
        if isinstance(self.dataset, (str, Path)):
            return read_pairs(self.dataset)
        return self.dataset


@dataclass(frozen=True)
class TrainSchedule:
    stages: tuple[Stage, ...]

    def __post_init__(self):
        if not self.stages:
            raise DataError("a schedule needs at least one stage")


def _mean_loss(model, feats, labels, weights) -> float:
    total = sum(logistic_loss(model, x, y, w) for x, y, w in zip(feats, labels, weights))
    return total / max(1, len(feats))


def train(schedule: TrainSchedule, seed: int = 0, dim: int = DEFAULT_DIM,
          init: LogRegModel | None = None) -> LogRegModel:
    """Plain SGD (batch 1) on logistic loss, stages applied in order.

    Learning rate decays as ``lr / sqrt(epoch)`` within each stage; the example
    order is reshuffled every epoch from a generator seeded once per call.
    """
    model = init.copy() if init is not None else LogRegModel(dim, seed=seed)
    rng = np.random.default_rng(seed)
    w = model.weights
    for stage in schedule.stages:
        if stage.epochs == 0:
            continue
        pairs = stage.pairs()
        if not pairs:
            raise DataError("empty dataset in a stage with positive epochs")
        feats = [featurize(p.text_a, p.text_b, model.dim) for p in pairs]
        labels = [float(p.label) for p in pairs]
        pweights = [p.weight for p in pairs]
        for epoch in range(1, stage.epochs + 1):
            lr = stage.learning_rate / math.sqrt(epoch)
            for i in rng.permutation(len(feats)):
                x = feats[i]
                z = x.dot(w) + model.bias
                g = pweights[i] * (_prob(z) - labels[i])
                if len(x.indices):
                    w[x.indices] -= lr * g * x.values
                model.bias -= lr * g
            model.history.append(_mean_loss(model, feats, labels, pweights))
    return model


# --------------------------------------------------------------------------
# backends


class BuiltinScorer:
    def __init__(self, model: LogRegModel):
        self.model = model

    def predict(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        m = self.model
        return [m.predict_proba(featurize(a, b, m.dim)) for a, b in pairs]

    def close(self):
        pass


class ConstantScorer:
    """Returns the same score for every pair; a placeholder when no model is used."""

    def __init__(self, value: float = 0.5):
        self.value = value

    def predict(self, pairs):
        return [self.value] * len(pairs)

    def close(self):
        pass


_HOSTPORT = re.compile(r"^(?:tcp://)?([A-Za-z0-9.\-]+|\[[0-9a-fA-F:]+\]):(\d+)$")


class ExternalScorer:
    """Delegates scoring over the JSON-lines protocol.

    ``endpoint`` is ``host:port`` (or ``tcp://host:port``) for a TCP server,
    otherwise a command line for a child process that reads requests on stdin
    and writes responses on stdout. The child is started lazily and reused.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._next_id = 0
        m = _HOSTPORT.match(endpoint.strip())
        self._tcp = (m.group(1).strip("[]"), int(m.group(2))) if m else None

    def _ids(self, n: int) -> list[str]:
        ids = [str(self._next_id + k) for k in range(n)]
        self._next_id += n
        return ids

    def predict(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        ids = self._ids(len(pairs))
        lines = [json.dumps({"id": i, "text_a": a, "text_b": b}, ensure_ascii=False) + "\n"
                 for i, (a, b) in zip(ids, pairs)]
        if self._tcp:
            try:
                sock = socket.create_connection(self._tcp, timeout=self.timeout)
            except OSError as e:
                raise ScorerError(f"scorer endpoint {self.endpoint} unreachable: {e}") from None
            with sock, sock.makefile("w", encoding="utf-8", newline="\n") as wfh, \
                    sock.makefile("r", encoding="utf-8") as rfh:
                return self._exchange(wfh, rfh, ids, lines)
        proc = self._process()
        return self._exchange(proc.stdin, proc.stdout, ids, lines)

    def _process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    shlex.split(self.endpoint), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                    text=True, encoding="utf-8", bufsize=1)
            except OSError as e:
                raise ScorerError(f"cannot start scorer {self.endpoint!r}: {e}") from None
        return self._proc

    def _exchange(self, wfh, rfh, ids: list[str], lines: list[str]) -> list[float]:
        write_error: list[BaseException] = []

        def writer():
            try:
                for line in lines:
                    wfh.write(line)
                wfh.flush()
            except (OSError, ValueError) as e:
                write_error.append(e)

        t = threading.Thread(target=writer, daemon=True)
        t.start()
        pending = set(ids)
        scores: dict[str, float] = {}
        try:
            while pending:
                line = rfh.readline()
                if not line:
                    break
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    rid, score = rec["id"], rec["score"]
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ScorerError(f"malformed scorer response {line.strip()!r} ({e})") from None
                if not isinstance(rid, str) or rid not in pending:
                    raise ScorerError(f"scorer answered unrequested id {rid!r}")
                if isinstance(score, bool) or not isinstance(score, (int, float)) \
                        or not 0.0 <= score <= 1.0:
                    raise ScorerError(f"scorer returned invalid score {score!r} for id {rid}")
                scores[rid] = float(score)
                pending.discard(rid)
        except OSError as e:
            raise ScorerError(f"scorer connection failed: {e}") from None
        t.join(timeout=self.timeout)
        if pending:
            missing = sorted(pending, key=int)[0]
            detail = f" (write failed: {write_error[0]})" if write_error else ""
            raise ScorerError(f"scorer closed without answering id {missing}{detail}")
        return [scores[i] for i in ids]

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_backend(model: LogRegModel | str | Path | None = None, external: str | None = None):
    """Exactly one of a built-in model and an external endpoint.

    With neither given, the ``LEXENT_SCORER`` environment variable is consulted.
    """
    if external is None and model is None:
        external = os.environ.get(ENV_SCORER) or None
    if (model is None) == (external is None):
        raise DataError("configure exactly one scorer: a model file or an external endpoint")
    if external is not None:
        return ExternalScorer(external)
    if not isinstance(model, LogRegModel):
        model = LogRegModel.load(model)
    return BuiltinScorer(model)


def predict(backend, pairs: Sequence[tuple[str, str]]) -> list[float]:
    return list(backend.predict(list(pairs)))


def score_matrix(backend, query_paragraphs: Sequence[str], cand_paragraphs: Sequence[str]) -> np.ndarray:
    """Entry (i, j) scores (query paragraph i, candidate paragraph j)."""
    n, m = len(query_paragraphs), len(cand_paragraphs)
    if n < 1 or m < 1:
        raise DataError(f"score matrix needs at least one paragraph per side, got {n}x{m}")
    flat = [(q, c) for q in query_paragraphs for c in cand_paragraphs]
    return np.array(predict(backend, flat), dtype=np.float64).reshape(n, m)
