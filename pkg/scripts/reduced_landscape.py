"""Balance function of the reduced problem and its root for a family of m."""
import argparse

import numpy as np

from hartree_system.params_special import SystemParams
from hartree_system.reduced_energy import PotentialPair, ReducedEnergyModel, landscape, solve_reduced_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=5)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--r0", type=float, default=1.0)
    ap.add_argument("--B4", type=float, default=None, help="two-bubble coefficient; fitted when omitted")
    args = ap.parse_args()
    N = args.N
    P = SystemParams(N, args.alpha)
    pot = PotentialPair(args.r0, (0.0,) * (N - 2), -np.eye(N - 1), -np.eye(N - 1), delta=args.r0 / 10)
    model = ReducedEnergyModel.build(P, pot, L0=0.01, L1=2.0, B4_pair=args.B4)
    for k, (v, prov) in sorted(model.B.items()):
        print(f"{k:14s} {v:14.6f}  ({prov})")
    for t, g in landscape(model, 0.02, 1.0, 8):
        print(f"t={t:.4f}  G={g:+.6e}")
    for m in (4, 8, 16, 32):
        sol = solve_reduced_system(model, m)
        print(f"m={m:3d}  t*={sol.t_star:.8f}  lambda={sol.lam:.4e}  residual={sol.residual_norm:.1e}")


if __name__ == "__main__":
    main()
