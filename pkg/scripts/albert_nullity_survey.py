"""Histogram of zero-mode counts of random derivations of each Jordan algebra.

    python3 scripts/albert_nullity_survey.py --samples 200
"""

import argparse
from collections import Counter

import numpy as np

from conetheory.jordan import algebra_from_name, derivation_kernel, derivation_space, random_derivation


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kinds", default="spin3,spin4,spin5,herm2c,herm3c,herm3r,albert")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    for name in args.kinds.split(","):
        alg = algebra_from_name(name)
        _, ddim = derivation_space(alg)
        counts = Counter(derivation_kernel(alg, random_derivation(alg, rng))[1] for _ in range(args.samples))
        hist = ", ".join(f"{k}: {v}" for k, v in sorted(counts.items()))
        print(f"{name:8s} dim={alg.dim:3d} der={ddim:3d} nullity {{{hist}}}")


if __name__ == "__main__":
    main()
