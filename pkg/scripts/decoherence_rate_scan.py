"""Ensemble dephasing versus adiabatic rate a and perturbation scale.

Prints the distance from the ensemble mean to the robust projection of |+><+|
for a grid of rates, so the crossover to the 1/sqrt(n_paths) sampling floor is
visible.

    python3 scripts/decoherence_rate_scan.py --paths 2000 --seed 42
"""

import argparse

import numpy as np

from conetheory.decoherence import AdiabaticFamily, EnsembleSpec, ensemble_average
from conetheory.statespace import DensityState


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    plus = DensityState(0.5 * np.ones((2, 2)))
    rates = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
    scales = [0.02, 0.1, 1.0]
    print(f"{'a':>8s} " + " ".join(f"scale={s:<8g}" for s in scales))
    for a in rates:
        fam = AdiabaticFamily(np.diag([0.0, 1.0]), a=a)
        devs = [
            ensemble_average(fam, EnsembleSpec(args.paths, s, args.seed), plus, n_workers=args.workers).deviation
            for s in scales
        ]
        print(f"{a:8.0e} " + " ".join(f"{d:<14.4e}" for d in devs))
    print(f"sampling floor ~ {1 / np.sqrt(2 * args.paths):.4e}")


if __name__ == "__main__":
    main()
