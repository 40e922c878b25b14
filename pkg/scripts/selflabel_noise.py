"""e1/e2 sweep of the self-labelling pass on synthetic data with planted label noise.

Texts mix a shared vocabulary with a class-specific one (``--overlap`` sets the
shared share); a fraction of the positives uses the negative class vocabulary. Reports how many planted
and clean positives get demoted, and the label accuracy against the true classes.
"""

import argparse
import random

from lexent.pairs import LabeledPair
from lexent.selflabel import SelfLabelConfig, run_self_label

SETTINGS = ["3/0", "1/2", "2/1", "2/3", "3/3", "5/5"]


def make_set(rng, n_pos, n_neg, noise, overlap):
    pos = [f"p{i}" for i in range(40)]
    neg = [f"n{i}" for i in range(40)]
    shared = [f"s{i}" for i in range(40)]

    def text(v):
        return " ".join(rng.choice(shared) if rng.random() < overlap else rng.choice(v) for _ in range(6))

    pairs, truth = [], []
    for i in range(n_pos):
        noisy = i < int(noise * n_pos)
        v = neg if noisy else pos
        pairs.append(LabeledPair(f"x{i}", text(v), text(v), True, "chunk-derived"))
        truth.append(not noisy)
    for i in range(n_neg):
        pairs.append(LabeledPair(f"y{i}", text(neg), text(neg), False, "chunk-derived"))
        truth.append(False)
    return pairs, truth


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise", type=float, default=0.2)
    ap.add_argument("--n-pos", type=int, default=200)
    ap.add_argument("--n-neg", type=int, default=200)
    ap.add_argument("--overlap", type=float, default=0.8)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    print("e1/e2\tnoisy_flipped\tclean_flipped\tlabel_acc")
    for setting in SETTINGS:
        e1, e2 = map(int, setting.split("/"))
        fn = fc = acc = 0.0
        for seed in range(args.seeds):
            pairs, truth = make_set(random.Random(seed), args.n_pos, args.n_neg, args.noise, args.overlap)
            res = run_self_label(pairs, config=SelfLabelConfig(e1, e2), seed=seed, dim=2 ** 14)
            flipped = set(res.flipped)
            noisy = [i for i, p in enumerate(pairs) if p.label and not truth[i]]
            clean = [i for i, p in enumerate(pairs) if p.label and truth[i]]
            fn += sum(i in flipped for i in noisy) / max(1, len(noisy))
            fc += sum(i in flipped for i in clean) / max(1, len(clean))
            acc += sum(y == t for y, t in zip(res.labels, truth)) / len(truth)
        k = args.seeds
        print(f"{setting}\t{fn / k:.3f}\t{fc / k:.3f}\t{acc / k:.3f}")


if __name__ == "__main__":
    main()
