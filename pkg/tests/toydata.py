"""Small in-memory corpora and scorer stand-ins shared by several test files."""

import hashlib
import random

from lexent.corpus import build_document

TOPIC_WORDS = {
    "contract": "contract breach seller buyer goods delivery damages repudiation".split(),
    "tax": "tax income reassessment deduction minister penalty appeal interest".split(),
    "patent": "patent claim invention prior art infringement obvious utility".split(),
    "employment": "employee dismissal notice cause accommodation grievance reinstatement".split(),
}


def toy_corpus(n_docs=20, seed=0):
    """``n_docs`` multi-paragraph cases plus one query per topic."""
    rng = random.Random(seed)
    topics = list(TOPIC_WORDS)
    docs = []
    for i in range(n_docs):
        words = TOPIC_WORDS[topics[i % len(topics)]]
        paras = [f"[{k + 1}] " + " ".join(rng.choices(words, k=rng.randint(4, 12))) + "."
                 for k in range(rng.randint(1, 4))]
        docs.append(build_document(f"d{i:02d}", "case", "\n".join(paras)))
    queries = []
    for t in topics:
        paras = [f"[{k + 1}] " + " ".join(rng.choices(TOPIC_WORDS[t], k=6)) + "." for k in range(2)]
        queries.append(build_document(f"q_{t}", "case", "\n".join(paras)))
    return queries, docs


class HashScorer:
    """Deterministic pseudo-semantic scores in [0, 1] derived from the texts."""

    def predict(self, pairs):
        out = []
        for a, b in pairs:
            h = hashlib.sha256((a + "\x00" + b).encode()).digest()
            out.append(int.from_bytes(h[:4], "little") / 2 ** 32)
        return out

    def close(self):
        pass
