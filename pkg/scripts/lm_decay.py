"""Weighted norm of the error term l_m against the concentration parameter.

The sup over the sample set mixes two regimes: near the peaks the bubble-bubble
interaction decays like lambda^-2, while in the cutoff band the tail of the
bubbles decays only like lambda^(-(N-2)/2 + tau).  The fitted slope over a
dyadic lambda window therefore depends on delta; this script sweeps it.
"""
import argparse

import numpy as np

from hartree_system.multibubble import (CutoffSpec, PolygonConfig, WeightedNormSpec, norm_weight,
                                        residual_lm_probe, structured_samples)
from hartree_system.params_special import SystemParams
from hartree_system.quadrature import MonteCarloSpec
from hartree_system.reduced_energy import PotentialPair


def lm_norms(lam, delta, m=4, samples=4000, seed=1):
    P = SystemParams(5, 1.0)
    pc = PolygonConfig(m, 1.0, (0.0, 0.0, 0.0), lam, P)
    cut = CutoffSpec(1.0, (0.0, 0.0, 0.0), delta)
    pot = PotentialPair(1.0, (0.0, 0.0, 0.0), -np.eye(4), -np.eye(4), delta=delta)
    spec = WeightedNormSpec(structured_samples(pc, cut, n_random=64, seed=seed))
    res = residual_lm_probe(pc, cut, pot.K(1), pot.K(2), spec, MonteCarloSpec(samples, seed))
    pts = spec.sample_set
    w = norm_weight("starstar", pc, pts, spec.tau)
    v = np.array([abs(r[1]) + abs(r[3]) for r in res.per_point])
    inner = cut.distance(pts) < delta
    return res.norm_estimate, float(np.max(v[inner] / w[inner]))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    ap.add_argument("--lams", type=float, nargs="+", default=[32, 64, 128, 256])
    ap.add_argument("--samples", type=int, default=4000)
    args = ap.parse_args()
    lams = np.array(args.lams)
    for d in args.deltas:
        vals = np.array([lm_norms(l, d, samples=args.samples) for l in lams])
        s_all = np.polyfit(np.log(lams), np.log(vals[:, 0]), 1)[0]
        s_in = np.polyfit(np.log(lams), np.log(vals[:, 1]), 1)[0]
        print(f"delta={d:5.3f}  norms={np.array2string(vals[:, 0], precision=4)}  slope={s_all:+.3f}  interior slope={s_in:+.3f}")


if __name__ == "__main__":
    main()
