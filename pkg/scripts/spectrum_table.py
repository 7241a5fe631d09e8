"""Print mu_k for k = 0..kmax across admissible (N, alpha) and the gap to 1 off k = 1."""
import argparse

import numpy as np

from hartree_system.nondegeneracy import mu0_closed_form, spectral_multiplier
from hartree_system.params_special import SystemParams, admissibility_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kmax", type=int, default=8)
    ap.add_argument("--per-N", type=int, default=3)
    args = ap.parse_args()
    print(f"{'N':>3} {'alpha':>7} {'mu_0':>10} {'mu_0 closed':>11} " + " ".join(f"{'mu_' + str(k):>9}" for k in range(1, args.kmax + 1)))
    for N in range(5, 11):
        top = min(admissibility_bound(N), N)
        for a in np.linspace(0, top, args.per_N + 2)[1:-1]:
            P = SystemParams(N, float(a))
            mu = [spectral_multiplier(P, k) for k in range(args.kmax + 1)]
            print(f"{N:>3} {a:7.4f} {mu[0]:10.6f} {mu0_closed_form(P):11.6f} " + " ".join(f"{m:9.6f}" for m in mu[1:]))


if __name__ == "__main__":
    main()
