"""Distance between the quantum and classical Gibbs L-functionals as hbar shrinks.

    python3 scripts/gibbs_hbar_scan.py --temperature 0.5
"""

import argparse

import numpy as np

from conetheory.lfunc import StateFamily, hbar_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--temperature", type=float, default=0.5)
    ap.add_argument("--dim", type=int, default=256)
    args = ap.parse_args()

    fam = StateFamily("gibbs", args.temperature)
    alphas = np.array([0.25, 0.5, 1.0]) * np.exp(1j * 0.4)
    hbars = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125]
    rows = hbar_scan(fam, alphas, hbars, dim=args.dim)
    prev = None
    print(f"{'hbar':>8s} {'residual':>12s} {'ratio':>7s} valid")
    for r in rows:
        ratio = "" if prev is None else f"{r.residual / prev:7.3f}"
        print(f"{r.hbar:8.4g} {r.residual:12.4e} {ratio:>7s} {r.valid}")
        prev = r.residual


if __name__ == "__main__":
    main()
