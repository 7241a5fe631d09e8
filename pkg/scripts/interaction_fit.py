"""Two-bubble interaction energy against separation and the fitted coefficient."""
import argparse

from hartree_system.params_special import SystemParams
from hartree_system.quadrature import MonteCarloSpec
from hartree_system.reduced_energy import constant_B4, interaction_leading_order


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=5)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--samples", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    P = SystemParams(args.N, args.alpha)
    fit = constant_B4(P, mc=MonteCarloSpec(args.samples, args.seed))
    for s, e, se in zip(fit.separations, fit.energies, fit.std_errors):
        print(f"s={s:8.1f}  E={e:+.6e} +- {se:.1e}  s^(N-2) E={s ** (args.N - 2) * e:+.4f}")
    print(f"exponent {fit.exponent:.4f} (expected {args.N - 2})")
    print(f"B_pair {fit.B_pair:.4f} +- {fit.B_pair_std:.4f}   leading order {interaction_leading_order(P):.4f}")
    print(f"B4_pair {fit.B4_pair:.4f}")


if __name__ == "__main__":
    main()
