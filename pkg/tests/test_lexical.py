import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from lexent.errors import DataError
from lexent.lexical import (
    bm25_idf, bm25_scores, build_bm25, compute_idf, load_index, save_index, tfidf_cosine,
    tokenize, top_k,
)


def oracle_bm25(docs, query, k1=1.5, b=0.75):
    """Direct evaluation of the Okapi formula, one term and one document at a time."""
    n = len(docs)
    avgdl = sum(len(t) for _, t in docs) / n
    out = {}
    for doc_id, toks in docs:
        s = 0.0
        for term in query:
            df = sum(1 for _, t in docs if term in t)
            tf = toks.count(term)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(toks) / avgdl))
        out[doc_id] = s
    return out


def test_tokenize_examples():
    assert tokenize("") == []
    assert tokenize("The PRRA officer's") == ["the", "prra", "officer", "s"]
    assert tokenize("いい天気") == ["いい", "い天", "天気"]
    assert tokenize("天") == ["天"]
    assert tokenize("Art. 130(1)、民法") == ["art", "130", "1", "民法"]


def test_build_examples():
    idx = build_bm25([("d", ["a", "b", "c", "d"])])
    assert (idx.avgdl, idx.n_docs) == (4, 1)
    idx = build_bm25([("x", ["a"] * 2), ("y", ["a"] * 4), ("z", ["a"] * 6)])
    assert idx.avgdl == 4
    with pytest.raises(DataError):
        build_bm25([("x", ["a"]), ("x", ["b"])])
    with pytest.raises(DataError):
        build_bm25([])


def test_unknown_term_scores_zero():
    idx = build_bm25([("x", ["a"]), ("y", ["b"])])
    assert bm25_scores(idx, ["zzz"]) == {"x": 0.0, "y": 0.0}


def test_two_doc_contract_example():
    docs = [("d1", tokenize("The contract was breached by the seller")),
            ("d2", tokenize("A contract requires offer and acceptance and a contract price"))]
    got = bm25_scores(build_bm25(docs), ["contract"])
    want = oracle_bm25(docs, ["contract"])
    for k in want:
        assert got[k] == pytest.approx(want[k], abs=1e-12)


def test_repeat_is_monotone():
    docs = [("once", ["contract", "x", "y", "z"]), ("twice", ["contract", "contract", "y", "z"]),
            ("none", ["p", "q", "r", "s"])]
    s = bm25_scores(build_bm25(docs), ["contract"])
    assert s["twice"] > s["once"] > 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_bm25_matches_oracle_on_random_corpora(seed):
    rng = random.Random(seed)
    vocab = [f"t{i}" for i in range(rng.randint(1, 20))]
    docs = [(f"d{i}", [rng.choice(vocab) for _ in range(rng.randint(0, 30))])
            for i in range(rng.randint(1, 50))]
    if all(not t for _, t in docs):
        docs[0] = ("d0", [vocab[0]])
    query = [rng.choice(vocab) for _ in range(rng.randint(1, 6))]
    got = bm25_scores(build_bm25(docs), query)
    want = oracle_bm25(docs, query)
    assert all(abs(got[k] - want[k]) <= 1e-9 for k in want)


@given(st.integers(1, 500), st.data())
def test_idf_non_negative(n, data):
    df = data.draw(st.integers(0, n))
    assert bm25_idf(n, df) >= 0


def test_top_k_truncation_and_ties():
    idx = build_bm25([("c", ["a"]), ("b", ["a"]), ("a", ["x"])])
    res = top_k(idx, ["a"], 5)
    assert len(res) == 3
    assert [d for d, _ in res] == ["b", "c", "a"]
    with pytest.raises(DataError):
        top_k(idx, ["a"], 0)


def test_top_k_default_is_100():
    docs = [(f"d{i:03d}", ["a"] * (i % 7 + 1)) for i in range(250)]
    assert len(top_k(build_bm25(docs), ["a"])) == 100


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_full_top_k_is_total_order(seed):
    rng = random.Random(seed)
    docs = [(f"d{i}", [rng.choice("abc") for _ in range(rng.randint(1, 5))]) for i in range(rng.randint(1, 15))]
    idx = build_bm25(docs)
    q = ["a", "b"]
    ranked = top_k(idx, q, idx.n_docs)
    scores = bm25_scores(idx, q)
    assert sorted(d for d, _ in ranked) == sorted(scores)
    for (d1, s1), (d2, s2) in zip(ranked, ranked[1:]):
        assert s1 > s2 or (s1 == s2 and d1 < d2)
        assert scores[d1] == s1


def test_index_file_round_trip(tmp_path):
    docs = [("case:1", tokenize("the contract was void")), ("b#2", tokenize("天気 contract")), ("empty", [])]
    idx = build_bm25(docs, k1=1.2, b=0.6)
    path = tmp_path / "idx.bm25"
    save_index(idx, path)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == "BM25v1 1.2 0.6 3 " + repr(idx.avgdl)
    assert "DOCS" in text.splitlines()
    again = load_index(path)
    assert again == idx
    assert bm25_scores(again, ["contract"]) == bm25_scores(idx, ["contract"])


def test_index_file_rejects_garbage(tmp_path):
    p = tmp_path / "bad"
    p.write_text("BM25v1 1.5 0.75 1 2.0\nterm\td1:x\nDOCS\nd1\t2\n", encoding="utf-8")
    with pytest.raises(DataError, match=":2"):
        load_index(p)
    p.write_text("BM25v2 1 1 1 1\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_index(p)


def test_tfidf_cosine_examples():
    idf = {"a": 1.0, "b": 2.0, "c": 1.5, "d": 1.0}
    assert tfidf_cosine(["a", "b"], ["a", "b"], idf) == 1.0
    assert tfidf_cosine(["a"], ["c", "d"], idf) == 0.0
    assert tfidf_cosine([], ["a"], idf) == 0.0
    # half overlap: u = (a:1, b:2), v = (b:2, c:1.5); dot = 4
    expected = 4 / (math.sqrt(1 + 4) * math.sqrt(4 + 2.25))
    assert tfidf_cosine(["a", "b"], ["b", "c"], idf) == pytest.approx(expected, abs=1e-12)


def test_tfidf_rejects_negative_idf():
    with pytest.raises(DataError):
        tfidf_cosine(["a"], ["a"], {"a": -1.0})


@given(st.lists(st.sampled_from("abcde"), max_size=10), st.lists(st.sampled_from("abcde"), max_size=10))
def test_tfidf_cosine_range(a, b):
    idf = compute_idf([a, b, ["a"]])
    v = tfidf_cosine(a, b, idf)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(tfidf_cosine(b, a, idf))


def test_compute_idf_positive():
    idf = compute_idf([["a", "b"], ["a"]])
    assert idf["a"] < idf["b"] and min(idf.values()) >= 1.0
    assert Counter(idf) == Counter(compute_idf([["a"], ["a", "b"]]))
