"""Regenerate the bundled 30-case toy corpus under tests/fixtures/toy30.

Cases are stitched from topic-specific sentence banks so that BM25 and the
fused ranker have real signal; each query's gold set is the cases sharing
its topic and sub-issue.
"""

import argparse
import json
import random
from pathlib import Path

TOPICS = {
    "immigration": [
        "The PRRA officer's assessment of the risk of return was unreasonable.",
        "The applicant sought judicial review of the refusal of a permanent residence application.",
        "The officer failed to consider the best interests of the children affected by removal.",
        "Humanitarian and compassionate grounds were raised but not properly weighed.",
        "The visa officer relied on extrinsic evidence without giving notice to the applicant.",
        "The Refugee Protection Division found the claimant not credible.",
    ],
    "contract": [
        "The parties entered into a written contract for the supply of goods.",
        "The defendant repudiated the contract by refusing delivery.",
        "Damages for breach of contract are assessed at the date of breach.",
        "The limitation clause was held to be unconscionable and unenforceable.",
        "A minor may rescind the contract upon reaching the age of majority.",
        "The plaintiff relied on an oral representation made before signing.",
    ],
    "tax": [
        "The Minister reassessed the taxpayer for unreported business income.",
        "The taxpayer claimed deductions for expenses incurred to earn income.",
        "Penalties for gross negligence were imposed under the income tax statute.",
        "The transfer pricing adjustment was contested by the corporation.",
        "The appeal from the reassessment was dismissed by the Tax Court.",
        "Interest on the unpaid tax accrued from the original due date.",
    ],
    "patent": [
        "The patent claims were construed purposively from the perspective of a skilled person.",
        "The defendant's product was alleged to infringe the patent.",
        "The invention was held obvious in light of the prior art.",
        "The patentee sought an injunction and an accounting of profits.",
        "The claims were invalid for lack of sound prediction of utility.",
        "Anticipation requires disclosure and enablement in a single prior publication.",
    ],
    "employment": [
        "The employee was dismissed without reasonable notice.",
        "The employer alleged just cause based on repeated misconduct.",
        "The duty to accommodate a disability extends to the point of undue hardship.",
        "Constructive dismissal arises from a unilateral change to essential terms.",
        "The adjudicator awarded reinstatement and back pay.",
        "The collective agreement governed the grievance procedure.",
    ],
}
FILLER = [
    "The court reviewed the record as a whole.",
    "Counsel made submissions on the applicable standard of review.",
    "The evidence was considered in light of the governing principles.",
    "No costs were awarded in the circumstances.",
    "The matter was remitted for redetermination.",
]
FRENCH = "Le tribunal a conclu que la preuve est suffisante et que la demande est rejetée."


def make_case(rng, topic, n_paras):
    paras = []
    bank = TOPICS[topic]
    for i in range(n_paras):
        sents = rng.sample(bank, 2) + [rng.choice(FILLER)]
        rng.shuffle(sents)
        paras.append(f"[{i + 1}] " + " ".join(sents))
    return "\n".join(paras) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "toy30"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    (out / "cases").mkdir(parents=True, exist_ok=True)
    topics = list(TOPICS)
    by_topic = {t: [] for t in topics}
    for i in range(30):
        topic = topics[i % len(topics)]
        cid = f"case{i:03d}"
        text = make_case(rng, topic, rng.randint(3, 5))
        if i % 10 == 3:
            text += f"[{text.count('[') + 1}] {FRENCH}\n"
        (out / "cases" / f"{cid}.txt").write_text(text, encoding="utf-8")
        by_topic[topic].append(cid)

    queries, gold = [], []
    for j, topic in enumerate(topics):
        qid = f"q{j:02d}"
        text = make_case(rng, topic, 2)
        queries.append({"id": qid, "kind": "question", "text": text})
        gold.append({"query_id": qid, "positive_ids": sorted(by_topic[topic])[:3]})
    with open(out / "queries.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for q in queries:
            fh.write(json.dumps(q, ensure_ascii=False) + "\n")
    with open(out / "gold.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for g in gold:
            fh.write(json.dumps(g) + "\n")


if __name__ == "__main__":
    main()
