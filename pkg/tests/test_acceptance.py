"""Acceptance criteria, one check per criterion.

Each check prints a single ``[PASS]``/``[FAIL]`` line (visible even under
pytest's output capture). Run standalone with ``python tests/test_acceptance.py``.
"""

import difflib
import filecmp
import math
import random
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lexent.chunker import ChunkSpec, chunk_tokens  # noqa: E402
from lexent.cli import cli  # noqa: E402
from lexent.corpus import build_document  # noqa: E402
from lexent.datagen import build_retrieval_pairs, load_rules, negate  # noqa: E402
from lexent.fusion import FusionConfig, ScoreMatrixPair, aggregate, minmax, rank, union  # noqa: E402
from lexent.lexical import bm25_scores, build_bm25, tokenize  # noqa: E402
from lexent.metrics import accuracy, f_beta  # noqa: E402
from lexent.pairs import LabeledPair  # noqa: E402
from lexent.paralaw import AlignedPair, ParallelDoc, build_dataset, generate_samples  # noqa: E402
from lexent.scorer import (  # noqa: E402
    LogRegModel, SparseVector, Stage, TrainSchedule, logistic_grad, logistic_loss, score_matrix, train,
)
from lexent.selflabel import SelfLabelConfig, run_self_label  # noqa: E402
from toydata import HashScorer, toy_corpus  # noqa: E402

FIXTURE = Path(__file__).parent / "fixtures" / "toy30"


# 1 ------------------------------------------------------------------------
def ac01_f2_arithmetic():
    a = f_beta(0.6974, 0.7342, 2)
    b = f_beta(0.6824, 0.7252, 2)
    ok = abs(a - 0.7266) <= 1e-4 and abs(b - 0.7162) <= 1e-4
    return ok, f"F2(150/50)={a:.6f} vs 0.7266, F2(no chunking)={b:.6f} vs 0.7162, tol 1e-4"


# 2 ------------------------------------------------------------------------
def ac02_accuracy_arithmetic():
    acc = accuracy([True] * 49 + [False] * 32, [True] * 81)
    return abs(acc - 0.6049) <= 1e-4, f"49/81={acc:.6f} vs 0.6049, tol 1e-4"


# 3 ------------------------------------------------------------------------
TABLE2 = [  # (first, second, nfsp, nmsp), row order of the reference table
    ("Shall we go out?", "The weather is nice.", None, 2),
    ("お出掛けしよ？", "いい天気ね。", None, 2),
    ("お出掛けしよ？", "The weather is nice.", None, 2),
    ("Shall we go out?", "いい天気ね。", None, 2),
    ("いい天気ね。", "お出掛けしよ？", None, 1),
    ("The weather is nice.", "Shall we go out?", None, 1),
    ("The weather is nice.", "お出掛けしよ？", 1, 1),
    ("いい天気ね。", "Shall we go out?", 1, 1),
    ("The weather is nice.", "ランダム文。", 0, 0),
    ("いい天気ね。", "Random sentence.", 0, 0),
    ("The weather is nice.", "Random sentence.", None, 0),
    ("いい天気ね。", "ランダム文。", None, 0),
]


def ac03_table2():
    out = generate_samples(AlignedPair(0, "The weather is nice.", "いい天気ね。"),
                           AlignedPair(1, "Shall we go out?", "お出掛けしよ？"),
                           AlignedPair(0, "Random sentence.", "ランダム文。"))
    rows = [(s.first, s.second, s.nfsp, s.nmsp) for s in out]
    exact = rows == TABLE2
    n_nfsp = sum(s.nfsp is not None for s in out)
    rng = random.Random(0)
    ratios_ok = True
    for trial in range(20):
        corpus = [ParallelDoc(f"d{d}", tuple(AlignedPair(i, f"t{trial} d{d} s{i}.", f"文{trial}{d}{i}。")
                                             for i in range(rng.randint(1, 8))))
                  for d in range(rng.randint(2, 6))]
        if not any(len(doc.pairs) >= 2 for doc in corpus):
            continue
        samples = build_dataset(corpus, seed=trial)
        nm = len(samples)
        nf = sum(s.nfsp is not None for s in samples)
        ratios_ok &= nm == 3 * nf
    ok = exact and len(out) == 12 and n_nfsp == 4 and ratios_ok
    return ok, (f"rows match={exact}, samples={len(out)}, nfsp-labelled={n_nfsp}, "
                f"NMSP:NFSP=3:1 on 20 synthetic corpora={ratios_ok} (reference-scale counts 718000/239000="
                f"{718000 / 239000:.4f}, non-blocking)")


# 4 ------------------------------------------------------------------------
def _oracle_bm25(docs, query, k1=1.5, b=0.75):
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


def ac04_bm25_oracle():
    rng = random.Random(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        vocab = [f"w{i}" for i in range(rng.randint(1, 20))]
        docs = [(f"d{i}", [rng.choice(vocab) for _ in range(rng.randint(1, 40))])
                for i in range(rng.randint(1, 50))]
        query = [rng.choice(vocab) for _ in range(rng.randint(1, 8))]
        got = bm25_scores(build_bm25(docs), query)
        want = _oracle_bm25(docs, query)
        worst = max(worst, max(abs(got[k] - want[k]) for k in want))
    dt = time.perf_counter() - t0
    return worst <= 1e-9 and dt < 5.0, f"max abs diff={worst:.2e} (tol 1e-9), {dt:.2f}s (limit 5s)"


# 5 ------------------------------------------------------------------------
GRID = ["110/20", "150/10", "150/20", "150/40", "150/50", "200/50", "300/50"]


def ac05_chunk_law():
    t0 = time.perf_counter()
    bad = []
    for setting in GRID:
        spec = ChunkSpec.parse(setting)
        w, s = spec.window, spec.stride
        tokens = [str(i) for i in range(2000)]
        for n in range(1, 2001):
            cs = chunk_tokens(tokens[:n], spec)
            expected = 1 + math.ceil(max(0, n - w) / s)
            covered = cs[0].start_token == 0 and cs[-1].end_token == n and all(
                b.start_token <= a.end_token for a, b in zip(cs, cs[1:]))
            overlaps = all(a.end_token - b.start_token == w - s for a, b in zip(cs, cs[1:-1]))
            if len(cs) != expected or not covered or not overlaps:
                bad.append((setting, n))
    dt = time.perf_counter() - t0
    return not bad and dt < 5.0, (f"{len(GRID)} settings x L=1..2000, violations={len(bad)}"
                                  f"{' e.g. ' + str(bad[:3]) if bad else ''}, {dt:.2f}s (limit 5s)")


# 6 ------------------------------------------------------------------------
def ac06_selflabel_monotone():
    rng = random.Random(6)
    vocab = "a b c d e f g h i j".split()
    neg_to_pos = wrong_flip_sets = 0
    total_flips = 0
    dim = 2 ** 8
    for inst in range(1000):
        pairs = [LabeledPair("q", " ".join(rng.choices(vocab, k=3)), " ".join(rng.choices(vocab, k=2)),
                             rng.random() < 0.6, "chunk-derived") for _ in range(rng.randint(1, 10))]
        y0 = [p.label for p in pairs]
        cfg = SelfLabelConfig(rng.randint(0, 3), rng.randint(0, 2), rng.uniform(0.3, 0.7),
                              rng.choice([0.1, 0.5, 1.0]))
        res = run_self_label(pairs, config=cfg, seed=inst, dim=dim)
        neg_to_pos += sum(1 for a, b in zip(y0, res.labels) if not a and b)
        expected = [i for i, y in enumerate(y0) if y and res.predictions[i] < cfg.decision_threshold]
        wrong_flip_sets += res.flipped != expected
        total_flips += len(res.flipped)
    identical = True
    for seed in range(5):
        pairs = [LabeledPair("q", f"x{rng.randint(0, 9)} y{rng.randint(0, 9)}", f"x{rng.randint(0, 9)}",
                             rng.random() < 0.5, "chunk-derived") for _ in range(40)]
        res = run_self_label(pairs, config=SelfLabelConfig(3, 0), seed=seed, dim=dim)
        plain = train(TrainSchedule((Stage(pairs, 3, 0.1),)), seed=seed, dim=dim)
        identical &= res.model.weights.tobytes() == plain.weights.tobytes() and res.model.bias == plain.bias
    ok = neg_to_pos == 0 and wrong_flip_sets == 0 and identical and total_flips > 0
    return ok, (f"1000 instances: neg->pos flips={neg_to_pos}, flip-set mismatches={wrong_flip_sets}, "
                f"total flips={total_flips}; 3/0 bit-identical to plain 3-epoch training={identical}")


# 7 ------------------------------------------------------------------------
def _noisy_set(rng, n_pos=100, n_neg=100, noise=0.2):
    pos_vocab = [f"p{i}" for i in range(30)]
    neg_vocab = [f"n{i}" for i in range(30)]

    def text(vocab):
        return " ".join(rng.choices(vocab, k=6))

    pairs, planted = [], []
    for i in range(n_pos):
        is_noise = i < int(noise * n_pos)
        vocab = neg_vocab if is_noise else pos_vocab
        pairs.append(LabeledPair("q", text(vocab), text(vocab), True, "chunk-derived"))
        planted.append(is_noise)
    for _ in range(n_neg):
        pairs.append(LabeledPair("q", text(neg_vocab), text(neg_vocab), False, "chunk-derived"))
        planted.append(False)
    order = list(range(len(pairs)))
    rng.shuffle(order)
    return [pairs[k] for k in order], [planted[k] for k in order]


def ac07_noise_repair():
    details, ok = [], True
    for seed in range(10):
        rng = random.Random(1000 + seed)
        pairs, planted = _noisy_set(rng)
        res = run_self_label(pairs, config=SelfLabelConfig(3, 2), seed=seed, dim=2 ** 12)
        flipped = set(res.flipped)
        noisy = [i for i, p in enumerate(pairs) if p.label and planted[i]]
        clean = [i for i, p in enumerate(pairs) if p.label and not planted[i]]
        fn = sum(i in flipped for i in noisy) / len(noisy)
        fc = sum(i in flipped for i in clean) / len(clean)
        ok &= fn > fc and flipped <= set(noisy + clean)
        details.append(f"{fn:.2f}/{fc:.2f}")
    return ok, "flipped fraction noisy/clean per seed: " + " ".join(details)


# 8 ------------------------------------------------------------------------
def ac08_fusion_endpoints():
    queries, docs = toy_corpus(20)
    be = HashScorer()
    from lexent.fusion import build_paragraph_index
    idx = build_paragraph_index(docs)
    same0 = same1 = True
    for q in queries:
        lex_only, sem_only = {}, {}
        for d in docs:
            rows = []
            for qp in q.paragraphs:
                s = bm25_scores(idx, tokenize(qp.text))
                rows.append([s[f"{d.id}#{p.index}"] for p in d.paragraphs])
            lex_only[d.id] = aggregate(minmax(np.array(rows)))
            sem_only[d.id] = aggregate(score_matrix(be, [p.text for p in q.paragraphs],
                                                    [p.text for p in d.paragraphs]))

        def order(sc):
            return [c for c, _ in sorted(sc.items(), key=lambda kv: (-kv[1], kv[0]))]

        same0 &= [c for c, _ in rank(q, docs, FusionConfig(0.0), be, idx)] == order(lex_only)
        same1 &= [c for c, _ in rank(q, docs, FusionConfig(1.0), be, idx)] == order(sem_only)
    spot = union(ScoreMatrixPair("q", "c", np.array([[0.0, 7.0]]), np.array([[0.2, 0.5]])),
                 FusionConfig(w_sem=0.7))[0, 1]
    ok = same0 and same1 and abs(spot - 0.65) <= 1e-12
    return ok, (f"20-doc toy corpus, {len(queries)} queries: w_sem=0 matches lexical-only={same0}, "
                f"w_sem=1 matches semantic-only={same1}; spot 0.7*0.5+0.3*1.0={spot:.12f}")


# 9 ------------------------------------------------------------------------
def ac09_negative_cap():
    rng = random.Random(9)
    words = "contract seller buyer minor rescind tax income patent claim notice court appeal".split()
    worst_neg, lost = 0, 0
    for trial in range(15):
        arts = [build_document(f"a{i:03d}", "article", " ".join(rng.choices(words, k=8)))
                for i in range(rng.randint(50, 320))]
        qs = [build_document(f"q{j}", "question", " ".join(rng.sample(words, 3))) for j in range(3)]
        ann = {q.id: rng.sample([a.id for a in arts], rng.randint(1, 6)) for q in qs}
        pairs = build_retrieval_pairs(qs, arts, ann)
        for q in qs:
            mine = [p for p in pairs if p.query_id == q.id]
            worst_neg = max(worst_neg, sum(not p.label for p in mine))
            lost += len(set(ann[q.id]) - {p.article_id for p in mine if p.label})
    return worst_neg <= 150 and lost == 0, (f"15 randomized annotation sets: max negatives/question="
                                            f"{worst_neg} (cap 150), positives lost={lost}")


# 10 -----------------------------------------------------------------------
def ac10_gradient_check():
    rng = np.random.default_rng(10)
    worst = 0.0
    h = 1e-6
    for _ in range(100):
        dim = 64
        m = LogRegModel(dim, rng.normal(0, 1.0, dim), float(rng.normal()))
        k = int(rng.integers(1, 12))
        idx = np.sort(rng.choice(dim, k, replace=False))
        x = SparseVector(idx, rng.normal(0, 1.0, k))
        y = float(rng.integers(0, 2))
        gw, gb = logistic_grad(m, x, y)
        num = []
        for j in idx:
            w0 = m.weights[j]
            m.weights[j] = w0 + h
            up = logistic_loss(m, x, y)
            m.weights[j] = w0 - h
            down = logistic_loss(m, x, y)
            m.weights[j] = w0
            num.append((up - down) / (2 * h))
        b0 = m.bias
        m.bias = b0 + h
        up = logistic_loss(m, x, y)
        m.bias = b0 - h
        down = logistic_loss(m, x, y)
        m.bias = b0
        num.append((up - down) / (2 * h))
        ana, num = np.append(gw, gb), np.array(num)
        rel = np.linalg.norm(ana - num) / max(np.linalg.norm(ana) + np.linalg.norm(num), 1e-12)
        worst = max(worst, float(rel))
    return worst <= 1e-4, f"100 probes, max relative error={worst:.2e} (tol 1e-4)"


# 11 -----------------------------------------------------------------------
def _is_word(ch):
    return ch.isalnum() or ch == "_"


def _oracle_negate(text, rules):
    """Literal search with explicit boundary checks; no regular expressions."""
    for r in rules:
        body, left, right = r.pattern, False, False
        if body.startswith("\\b"):
            body, left = body[2:], True
        if body.endswith("\\b") and body:
            body, right = body[:-2], True
        start = text.find(body)
        while start != -1:
            end = start + len(body)
            ok_l = not left or start == 0 or not _is_word(text[start - 1]) or not _is_word(body[0])
            ok_r = not right or end == len(text) or not _is_word(text[end]) or not _is_word(body[-1])
            if ok_l and ok_r:
                out = text[:start] + r.replacement + text[end:]
                if start == 0 and text[:1].isupper() and out[:1].islower():
                    out = out[0].upper() + out[1:]
                return out, r.priority
            start = text.find(body, start + 1)
    return None


def _probe_texts(rule, all_rules):
    body = rule.pattern.replace("\\b", "")
    if rule.language == "japanese":
        return [f"債権者は{body}", f"甲は{body}乙も{body}"]
    core = body.strip()
    other = next(r.pattern.replace("\\b", "").strip() for r in all_rules if r is not rule)
    return [f"The party {body} act.", f"{body}one acts.", f"It {core} and it {core} again.",
            f"The party {core} and {other} act.", f"{core.capitalize()} the court decide?"]


def ac11_negation_once():
    rules = load_rules()
    by_lang = {lang: [r for r in rules if r.language == lang] for lang in ("english", "japanese")}
    checked = mismatches = multi = reconstructed = 0
    for lang, rs in by_lang.items():
        for rule in rs:
            for text in _probe_texts(rule, rs):
                got = negate(text, rs)
                checked += 1
                if got != _oracle_negate(text, rs):
                    mismatches += 1
                if got is None:
                    continue
                out, prio = got
                applied = next(r for r in rs if r.priority == prio)
                again = negate(out, [applied])
                if again is not None and again[0] == text:
                    reconstructed += 1
                if _single_edit_count(text, out) > 1:
                    multi += 1
    ok = mismatches == 0 and multi == 0 and reconstructed == 0 and checked > 0
    return ok, (f"{len(rules)} shipped rules, {checked} probes: oracle mismatches={mismatches}, "
                f"multi-edit outputs={multi}, same-rule reconstructions={reconstructed}")


def _single_edit_count(a, b):
    """Number of separate edited regions between a and b."""
    ops = [op for op in difflib.SequenceMatcher(None, a.lower(), b.lower(), autojunk=False).get_opcodes()
           if op[0] != "equal"]
    if not ops:
        return 0
    # adjacent opcodes separated only by a short shared run count as one replacement
    regions, last_end = 1, ops[0][2]
    for op in ops[1:]:
        if op[1] - last_end > 4:
            regions += 1
        last_end = op[2]
    return regions


# 12 -----------------------------------------------------------------------
def _pipeline(out: Path, seed: int):
    out.mkdir(parents=True, exist_ok=True)
    common = ["--seed", str(seed), "--set", "scorer.dim=65536"]
    steps = [
        ["ingest", "--input", str(FIXTURE / "cases"), "--kind", "case", "--filter-language", "english",
         "--output", str(out / "corpus.jsonl")],
        ["index", "--corpus", str(out / "corpus.jsonl"), "--output", str(out / "docs.bm25")],
        ["retrieve", "--index", str(out / "docs.bm25"), "--queries", str(FIXTURE / "queries.jsonl"),
         "--k", "10", "--output", str(out / "bm25.tsv")],
        ["silver", "--corpus", str(out / "corpus.jsonl"), "--output", str(out / "silver.jsonl")],
        ["train", "--stage", f"{out / 'silver.jsonl'}:2", "--output", str(out / "model.npz")],
        ["fuse", "--queries", str(FIXTURE / "queries.jsonl"), "--candidates", str(out / "corpus.jsonl"),
         "--prefilter", str(out / "bm25.tsv"), "--model", str(out / "model.npz"),
         "--output", str(out / "selected.tsv"), "--ranked-output", str(out / "ranked.tsv")],
        ["eval", "--run", str(out / "selected.tsv"), "--gold", str(FIXTURE / "gold.jsonl"),
         "--output", str(out / "report.json")],
    ]
    for argv in steps:
        code = cli(argv + common)
        if code != 0:
            raise RuntimeError(f"step {argv[0]} exited {code}")


def ac12_e2e_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        t0 = time.perf_counter()
        _pipeline(tmp / "a", seed=3)
        dt = time.perf_counter() - t0
        _pipeline(tmp / "b", seed=3)
        names = sorted(p.name for p in (tmp / "a").iterdir())
        _, mismatch, errors = filecmp.cmpfiles(tmp / "a", tmp / "b", names, shallow=False)
        report = (tmp / "a" / "report.json").read_text().strip()
    ok = not mismatch and not errors and dt < 10.0 and len(names) == 8
    return ok, (f"{len(names)} artefacts byte-identical={not mismatch and not errors}, "
                f"single run {dt:.2f}s (limit 10s); report {report}")


CRITERIA = [
    ("AC1 F2 arithmetic", ac01_f2_arithmetic),
    ("AC2 accuracy arithmetic", ac02_accuracy_arithmetic),
    ("AC3 pretraining-sample table", ac03_table2),
    ("AC4 BM25 oracle equivalence", ac04_bm25_oracle),
    ("AC5 chunk-count law", ac05_chunk_law),
    ("AC6 self-label monotonicity", ac06_selflabel_monotone),
    ("AC7 noise repair", ac07_noise_repair),
    ("AC8 fusion endpoints", ac08_fusion_endpoints),
    ("AC9 negative cap", ac09_negative_cap),
    ("AC10 gradient check", ac10_gradient_check),
    ("AC11 negation single application", ac11_negation_once),
    ("AC12 end-to-end determinism", ac12_e2e_determinism),
]


def _line(name, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"


@pytest.mark.parametrize("name,fn", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(name, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for name, fn in CRITERIA:
        ok, detail = fn()
        failed += not ok
        print(_line(name, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
