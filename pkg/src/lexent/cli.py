"""Command-line entry point chaining the pipeline stages.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import chunker, corpus, datagen, fusion, lexical, metrics, paralaw, scorer, selflabel
from .config import load_config
from .errors import DataError
from .pairs import LabeledPair, gold_sets, read_annotations, read_pairs, write_pairs
from .runfile import RunFile, read_run, write_run


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=d if suppress else [],
                   metavar="KEY=VALUE", help="override a config value (repeatable)")
    p.add_argument("--seed", type=int, default=d if suppress else 0, help="seed for all randomness")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lexent", description=__doc__.splitlines()[0])
    _common(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        _common(p, suppress=True)
        return p

    p = cmd("ingest", "read raw documents into a JSON-lines corpus")
    p.add_argument("--input", required=True, help="directory of .txt files or a JSON-lines corpus")
    p.add_argument("--kind", required=True, choices=corpus.KINDS)
    p.add_argument("--output", required=True)
    p.add_argument("--filter-language", choices=["english"])

    p = cmd("index", "build a BM25 index file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--level", choices=["document", "paragraph"], default="document")

    p = cmd("retrieve", "BM25 top-k candidates per query")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--output", required=True)
    p.add_argument("--tag", default="bm25")
    p.add_argument("--keep-self", action="store_true", help="do not drop the query's own id")

    p = cmd("chunk", "expand (question, article) pairs into (question, chunk) pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--articles", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--stride", type=int)

    p = cmd("pairs", "gold positives plus tf-idf-capped negatives")
    p.add_argument("--questions", required=True)
    p.add_argument("--articles", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--cap", type=int)
    p.add_argument("--output", required=True)

    p = cmd("augment", "append tf-idf-similar articles and negated questions")
    p.add_argument("--questions", required=True)
    p.add_argument("--articles", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--negate", action="store_true")
    p.add_argument("--rules", help="negation rule file (default: bundled rules)")
    p.add_argument("--language", choices=datagen.LANGUAGES, default="english")
    p.add_argument("--output", required=True)

    p = cmd("silver", "silver supporting pairs from consecutive sentences")
    p.add_argument("--corpus", required=True)
    p.add_argument("--neg-ratio", type=float)
    p.add_argument("--sample-rate", type=float)
    p.add_argument("--output", required=True)

    p = cmd("paralaw", "cross-lingual NFSP/NMSP samples plus a train/validation split")
    p.add_argument("--input", required=True, help="TSV: doc_id, pos, text_a, text_b")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--all", help="also write the unsplit sample file")

    p = cmd("train", "train the built-in classifier over one or more stages")
    p.add_argument("--stage", action="append", required=True, metavar="PAIRS[:EPOCHS[:LR]]")
    p.add_argument("--output", required=True)

    p = cmd("selflabel", "train, demote suspicious positives, retrain")
    p.add_argument("--pairs", required=True)
    p.add_argument("--e1", type=int)
    p.add_argument("--e2", type=int)
    p.add_argument("--output-pairs", required=True)
    p.add_argument("--flips", required=True)
    p.add_argument("--model-out")

    p = cmd("fuse", "rank candidates by fused lexical/semantic score and select results")
    p.add_argument("--queries", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--prefilter", help="run file restricting candidates per query")
    p.add_argument("--model", help="built-in model file")
    p.add_argument("--external", help="external scorer endpoint (command or host:port)")
    p.add_argument("--w-sem", type=float)
    p.add_argument("--strategy", choices=fusion.STRATEGIES)
    p.add_argument("--output", required=True, help="run file of selected candidates")
    p.add_argument("--ranked-output", help="run file of the full ranking")
    p.add_argument("--matrix-dir", help="write lex/sem/fused matrix cache files here")
    p.add_argument("--tag", default="fused")

    p = cmd("ensemble", "learn ensemble weights on dev gold")
    p.add_argument("--run", action="append", required=True, metavar="MODEL_ID=PATH")
    p.add_argument("--gold", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--apply-output", help="write the decided ensemble run here")
    p.add_argument("--tag", default="ensemble")

    p = cmd("eval", "macro P/R/F2 of a run against gold annotations")
    p.add_argument("--run", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred-labels", help="JSON lines {id, label} for accuracy")
    p.add_argument("--gold-labels")
    p.add_argument("--output", help="also write the report JSON here")
    p.add_argument("--plot-data", help="append '<setting>\\t<metric>\\t<value>' rows here")
    p.add_argument("--setting", default="run")
    return ap


# --------------------------------------------------------------------------


def _docs(path, kind="case", cfg=None):
    abbrev = None
    if cfg and cfg["corpus"].get("abbreviations"):
        abbrev = corpus.load_word_list(cfg["corpus"]["abbreviations"])
    return corpus.ingest_collection(path, kind, abbreviations=abbrev)


def _pick(value, default):
    return default if value is None else value


def cmd_ingest(a, cfg):
    docs = _docs(a.input, a.kind, cfg)
    lang = a.filter_language or cfg["corpus"].get("filter_language")
    if lang:
        thr = cfg["corpus"]["language_threshold"]
        docs = [corpus.reindex(d, corpus.filter_language(list(d.paragraphs), lang, thr)) for d in docs]
    corpus.write_corpus_jsonl(docs, a.output)
    print(f"ingested {len(docs)} documents", file=sys.stderr)


def cmd_index(a, cfg):
    docs = _docs(a.corpus, cfg=cfg)
    k1, b = cfg["bm25"]["k1"], cfg["bm25"]["b"]
    if a.level == "paragraph":
        index = fusion.build_paragraph_index(docs, k1, b)
    else:
        index = lexical.build_bm25([(d.id, lexical.tokenize(d.text)) for d in docs], k1, b)
    lexical.save_index(index, a.output)


def cmd_retrieve(a, cfg):
    index = lexical.load_index(a.index)
    k = _pick(a.k, cfg["bm25"]["k"])
    rankings = {}
    for q in _docs(a.queries, "question", cfg):
        ranked = lexical.rank_scores(lexical.bm25_scores(index, lexical.tokenize(q.text)))
        if not a.keep_self:
            ranked = [(d, s) for d, s in ranked if d != q.id]
        rankings[q.id] = ranked[:k]
    write_run(RunFile.from_rankings(rankings, a.tag), a.output)


def cmd_chunk(a, cfg):
    spec = chunker.ChunkSpec(_pick(a.window, cfg["chunk"]["window"]),
                             _pick(a.stride, cfg["chunk"]["stride"]))
    articles = {d.id: d for d in _docs(a.articles, "article", cfg)}
    out = []
    for pair in read_pairs(a.pairs):
        if pair.article_id not in articles:
            raise DataError(f"pair for query {pair.query_id} references unknown article {pair.article_id!r}")
        tokens = lexical.tokenize(articles[pair.article_id].text)
        out.extend(chunker.expand_pairs(pair.text_a, (pair.article_id, tokens), pair.label, spec,
                                        pair.query_id))
    write_pairs(out, a.output)


def cmd_pairs(a, cfg):
    ann = read_annotations(a.annotations)
    questions = _docs(a.questions, "question", cfg)
    articles = _docs(a.articles, "article", cfg)
    cap = _pick(a.cap, cfg["datagen"]["cap"])
    positives = {q: v["positive_ids"] for q, v in ann.items()}
    write_pairs(datagen.build_retrieval_pairs(questions, articles, positives, cap=cap), a.output)


def cmd_augment(a, cfg):
    ann = read_annotations(a.annotations)
    articles = _docs(a.articles, "article", cfg)
    by_id = {d.id: d for d in articles}
    idf = datagen.article_idf(articles)
    n = _pick(a.n, cfg["datagen"]["augment_n"])
    rules = None
    if a.negate:
        rules = datagen.load_rules(a.rules or cfg["datagen"]["rules"], a.language)
    out = []
    for q in _docs(a.questions, "question", cfg):
        if q.id not in ann:
            raise DataError(f"question {q.id!r} has no annotation")
        label = ann[q.id]["label"]
        label = True if label is None else bool(label)
        try:
            gold = [by_id[i] for i in ann[q.id]["positive_ids"]]
        except KeyError as e:
            raise DataError(f"question {q.id!r}: unknown article {e.args[0]!r}") from None
        arts = datagen.augment_relevant(q.text, gold, articles, n, idf)
        gold_ids = {g.id for g in gold}
        variants = [(q.text, label, None)]
        if rules is not None:
            neg = datagen.negate(q.text, rules)
            if neg is not None:
                variants.append((neg[0], not label, "augmented"))
        for text, lab, prov in variants:
            for art in arts:
                p = prov or ("gold" if art.id in gold_ids else "augmented")
                out.append(LabeledPair(q.id, text, art.text, lab, p, article_id=art.id))
    write_pairs(out, a.output)


def cmd_silver(a, cfg):
    dg = cfg["datagen"]
    pairs = datagen.build_silver_supporting(
        _docs(a.corpus, "case", cfg), _pick(a.neg_ratio, dg["neg_ratio"]), a.seed,
        _pick(a.sample_rate, dg["sample_rate"]))
    write_pairs(pairs, a.output)


def cmd_paralaw(a, cfg):
    pc = cfg["paralaw"]
    samples = paralaw.build_dataset(paralaw.read_parallel_tsv(a.input), a.seed, pc["lang_a"], pc["lang_b"])
    train, valid = paralaw.split(samples, tuple(pc["ratio"]), a.seed)
    paralaw.write_samples(train, a.train)
    paralaw.write_samples(valid, a.valid)
    if a.all:
        paralaw.write_samples(samples, a.all)


def _parse_stage(text: str, cfg) -> scorer.Stage:
    parts = text.split(":")
    if len(parts) > 3:
        # allow ':' inside the path
        parts = [":".join(parts[:-2]), parts[-2], parts[-1]]
    try:
        epochs = int(parts[1]) if len(parts) > 1 else cfg["scorer"]["epochs"]
        lr = float(parts[2]) if len(parts) > 2 else cfg["scorer"]["learning_rate"]
    except ValueError:
        raise UsageError(f"bad --stage {text!r}: expected PAIRS[:EPOCHS[:LR]]") from None
    return scorer.Stage(read_pairs(parts[0]), epochs, lr)


def cmd_train(a, cfg):
    schedule = scorer.TrainSchedule(tuple(_parse_stage(s, cfg) for s in a.stage))
    model = scorer.train(schedule, a.seed, cfg["scorer"]["dim"])
    model.save(a.output)


def cmd_selflabel(a, cfg):
    sc = cfg["selflabel"]
    conf = selflabel.SelfLabelConfig(
        _pick(a.e1, sc["e1"]), _pick(a.e2, sc["e2"]), sc["decision_threshold"],
        cfg["scorer"]["learning_rate"], sc["rounds"])
    pairs = read_pairs(a.pairs)
    res = selflabel.run_self_label(pairs, None, conf, a.seed, cfg["scorer"]["dim"])
    write_pairs([replace(p, label=y) for p, y in zip(pairs, res.labels)], a.output_pairs)
    selflabel.write_flip_report(res.flipped, a.flips)
    if a.model_out:
        res.model.save(a.model_out)


def _backend(a, cfg, w_sem):
    external = a.external or cfg["scorer"]["external"]
    model = a.model or cfg["scorer"]["model"]
    if external and model:
        raise DataError("configure either a model or an external scorer, not both")
    if external or model:
        return scorer.make_backend(model=model, external=external)
    if w_sem == 0:
        return scorer.ConstantScorer(0.0)
    raise DataError("fusion with w_sem > 0 needs --model or an external scorer")


def cmd_fuse(a, cfg):
    fc = cfg["fusion"]
    conf = fusion.FusionConfig(_pick(a.w_sem, fc["w_sem"]), fc["aggregation"], fc["normalize_lex"])
    strategy = a.strategy or fc["strategy"]
    queries = _docs(a.queries, "question", cfg)
    cands = _docs(a.candidates, "case", cfg)
    by_id = {d.id: d for d in cands}
    allowed = read_run(a.prefilter).rankings() if a.prefilter else None
    index = fusion.build_paragraph_index(cands, cfg["bm25"]["k1"], cfg["bm25"]["b"])
    backend = _backend(a, cfg, conf.w_sem)
    ranked_all, selected = {}, {}
    try:
        for q in queries:
            if allowed is not None:
                pool = [by_id[d] for d, _ in allowed.get(q.id, []) if d in by_id]
            else:
                pool = [d for d in cands if d.id != q.id]
            keep = [] if a.matrix_dir else None
            ranked = fusion.rank(q, pool, conf, backend, index, keep)
            ranked_all[q.id] = ranked
            if ranked:
                chosen = set(fusion.decide(ranked, strategy, fc["k"], fc["beta"]))
                selected[q.id] = [(c, s) for c, s in ranked if c in chosen]
            if keep:
                d = Path(a.matrix_dir)
                d.mkdir(parents=True, exist_ok=True)
                for m in keep:
                    for kind in ("lex", "sem", "fused"):
                        fusion.write_matrix(getattr(m, kind), d / f"{m.query_id}__{m.cand_id}.{kind}")
    finally:
        backend.close()
    write_run(RunFile.from_rankings(selected, a.tag), a.output)
    if a.ranked_output:
        write_run(RunFile.from_rankings(ranked_all, a.tag), a.ranked_output)


def cmd_ensemble(a, cfg):
    fc = cfg["fusion"]
    runs = {}
    for item in a.run:
        mid, sep, path = item.partition("=")
        if not sep or not mid:
            raise UsageError(f"--run expects MODEL_ID=PATH, got {item!r}")
        if mid in runs:
            raise UsageError(f"duplicate model id {mid!r}")
        runs[mid] = read_run(path).rankings()
    gold = gold_sets(read_annotations(a.gold))
    weights = fusion.learn_ensemble(runs, gold, fc["strategy"], fc["k"], fc["beta"], cfg["eval"]["beta"])
    Path(a.output).write_text(
        json.dumps({"weights": weights.weights, "metric": weights.metric}, indent=2) + "\n",
        encoding="utf-8")
    if a.apply_output:
        fused = fusion.combine(runs, weights.weights)
        chosen = {}
        for q, ranked in fused.items():
            if ranked:
                keep = set(fusion.decide(ranked, fc["strategy"], fc["k"], fc["beta"]))
                chosen[q] = [(c, s) for c, s in ranked if c in keep]
        write_run(RunFile.from_rankings(chosen, a.tag), a.apply_output)


def _read_labels(path) -> dict[str, bool]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            out[str(rec["id"])] = bool(rec["label"])
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise DataError(f"{Path(path).name}:{lineno}: bad label record ({e})") from None
    return out


def cmd_eval(a, cfg):
    preds = read_run(a.run).id_sets()
    gold = gold_sets(read_annotations(a.gold))
    acc = None
    if bool(a.pred_labels) != bool(a.gold_labels):
        raise UsageError("--pred-labels and --gold-labels go together")
    if a.pred_labels:
        p, g = _read_labels(a.pred_labels), _read_labels(a.gold_labels)
        if set(p) != set(g):
            raise DataError("predicted and gold label files cover different ids")
        ids = sorted(g)
        acc = metrics.accuracy([p[i] for i in ids], [g[i] for i in ids])
    report = metrics.evaluate(preds, gold, acc)
    beta = cfg["eval"]["beta"]
    rec = report.to_json()
    if beta != 2.0:
        rec[f"f_beta_{beta:g}"] = metrics.f_beta(report.p_macro, report.r_macro, beta)
    text = json.dumps(rec, sort_keys=True)
    print(text)
    if a.output:
        Path(a.output).write_text(text + "\n", encoding="utf-8")
    if a.plot_data:
        with open(a.plot_data, "a", encoding="utf-8", newline="\n") as fh:
            for key in sorted(rec):
                if rec[key] is not None:
                    fh.write(f"{a.setting}\t{key}\t{rec[key]!r}\n")


COMMANDS = {
    "ingest": cmd_ingest, "index": cmd_index, "retrieve": cmd_retrieve, "chunk": cmd_chunk,
    "pairs": cmd_pairs, "augment": cmd_augment, "silver": cmd_silver, "paralaw": cmd_paralaw,
    "train": cmd_train, "selflabel": cmd_selflabel, "fuse": cmd_fuse, "ensemble": cmd_ensemble,
    "eval": cmd_eval,
}


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, args.overrides or [])
        COMMANDS[args.command](args, cfg)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (DataError, OSError) as e:
        print(f"lexent: error: {e}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(cli())
