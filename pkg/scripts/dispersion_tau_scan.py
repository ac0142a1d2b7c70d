"""Outside mass of a propagated k^2/2 wavepacket versus tau.

The initial packet has a width comparable to tau * |U| at moderate tau, so the
mass outside tau * U decays slowly at first and only later faster than any
power. Successive ratios give the local decay exponent.

    python3 scripts/dispersion_tau_scan.py --grid 65536 --kmax 8
"""

import argparse

import numpy as np

from conetheory.excitations import ElementarySpace, Wavepacket, bump, essential_support_check, parse_dispersion


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=65536)
    ap.add_argument("--kmax", type=float, default=8.0)
    ap.add_argument("--support", default="0.9:1.1")
    ap.add_argument("--inflation", type=float, default=1.2)
    ap.add_argument("--taus", default="200,400,800,1600,3200")
    args = ap.parse_args()

    lo, hi = (float(v) for v in args.support.split(":"))
    space = ElementarySpace(parse_dispersion("k^2/2"), n_k=args.grid, k_max=args.kmax)
    phi = Wavepacket(space, bump(space.k_grid, lo, hi))
    print(f"{'tau':>8s} {'outside':>12s} {'outside(2tau)':>14s} {'exponent':>9s}")
    for tau in (float(t) for t in args.taus.split(",")):
        try:
            r = essential_support_check(phi, tau, args.inflation)
        except ValueError as exc:
            print(f"{tau:8g}  stopped: {exc}")
            break
        print(f"{tau:8g} {r.outside_mass:12.4e} {r.outside_mass_2tau:14.4e} {r.exponent_fit:9.3f}")


if __name__ == "__main__":
    main()
