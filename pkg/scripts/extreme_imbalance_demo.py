"""Show classifier collapse at 1:1000 imbalance and the balanced-scheme fix.

Trains each classifier twice on the same population: once on the raw
1:1000 training set and once on the balanced all-minority scheme, then
scores both against a fresh balanced test draw. The profile narrows the
throughput and RTT gaps; with the default (well-separated) profile the
raw fits would not collapse, because imbalance only hurts when the
classes overlap.
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from flowbalance.dataset import (
    FlowProfile,
    apply_scheme,
    generate_flows,
    partition,
    standard_schemes,
)
from flowbalance.evaluate import f1_score
from flowbalance.trees import MODEL_KINDS, fit_model

# ~100 balanced rows cannot support the default tree depths
SHALLOW_PARAMS = {
    "tree": {"max_depth": 4},
    "forest": {"max_depth": 6},
    "boost": {"max_depth": 2, "n_rounds": 40},
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-total", type=int, default=50_000)
    parser.add_argument("--ir", type=float, default=1 / 1000)
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    profile = FlowProfile(separation=0.7, slow_rtt_mean=1.95)
    pop = generate_flows(args.n_total, args.ir, seed=100 + args.seed, profile=profile)
    test = generate_flows(3_000, 1.0, seed=9000 + args.seed, profile=profile)
    scheme = standard_schemes(partition(pop))["train2"]
    balanced = apply_scheme(pop, scheme, seed=args.seed)

    n_min = int((pop.labels == 1).sum())
    print(f"population: {pop.n} rows, {n_min} slow ({n_min / pop.n:.2%})")
    print(f"balanced scheme keeps {balanced.n} rows; test set {test.n} rows\n")
    print(f"{'classifier':<10} {'raw F1':>8} {'balanced F1':>12}")
    for kind in MODEL_KINDS:
        params = SHALLOW_PARAMS[kind]
        raw = fit_model(kind, pop.features, pop.labels, params, seed=args.seed)
        bal = fit_model(kind, balanced.features, balanced.labels, params, seed=args.seed)
        f1_raw = f1_score(test.labels, raw.predict(test.features))
        f1_bal = f1_score(test.labels, bal.predict(test.features))
        print(f"{kind:<10} {f1_raw:>8.3f} {f1_bal:>12.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
