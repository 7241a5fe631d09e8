"""Local Pohozaev residuals on the exact bubble and on a perturbed potential."""
import argparse

import numpy as np

from hartree_system.bubble import Bubble
from hartree_system.multibubble import PolygonConfig
from hartree_system.params_special import SystemParams
from hartree_system.pohozaev import (BubbleField, PohozaevDomain, RadialBump, identity_check_d12,
                                     pohozaev_dilation_residual, pohozaev_scaling_residual,
                                     pohozaev_translation_residual)
from hartree_system.quadrature import MonteCarloSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--lam", type=float, default=30.0)
    args = ap.parse_args()
    P = SystemParams(5, 1.0)
    c = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    f = BubbleField(Bubble(P, c, args.lam))
    dom = PohozaevDomain.default(1.0, (0.0, 0.0, 0.0), 0.1)
    mc = MonteCarloSpec(args.samples, 0)
    for K in (1.0, 1.05):
        d1 = pohozaev_dilation_residual(f, f, K, K, dom, mc)
        d2 = pohozaev_translation_residual(f, f, K, K, dom, 3, mc)
        d3 = pohozaev_scaling_residual(f, f, PolygonConfig(1, 1.0, (0, 0, 0), args.lam, P), None, K, K, mc)
        for name, r in (("d1", d1), ("d2", d2), ("d3", d3)):
            print(f"K={K:4.2f} {name}: {r.value:+.3e} +- {r.std_error:.1e}  zero={r.is_zero()}")
    blocks = identity_check_d12(RadialBump(c, 0.15), RadialBump(c, 0.12, 0.7), 1.0, 1.0, dom, P, blocks=True)
    for k, v in blocks.items():
        print(f"d12 {k:9s} {v:+.12e}")


if __name__ == "__main__":
    main()
