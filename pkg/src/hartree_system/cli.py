"""Command-line entry point.

Exit codes: 0 success, 1 tolerance / accuracy failure, 2 input error.
Every command is a pure function of its arguments, the config bytes and --seed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .bubble import Bubble, BubblePair, bubble_eval, pde_residual, riesz_convolution_bubble
from .multibubble import (CutoffSpec, PolygonConfig, WeightedNormSpec, ansatz_eval, ansatz_neg_laplacian,
                          estimate_probe, residual_lm_probe, structured_samples)
from .nondegeneracy import NUMERIC_FLOOR, nondegeneracy_report
from .params_special import DomainError, SystemParams, funk_hecke_eigenvalue
from .pohozaev import (BubbleField, PohozaevDomain, pohozaev_dilation_residual, pohozaev_scaling_residual,
                       pohozaev_translation_residual)
from .quadrature import AccuracyError, MonteCarloSpec, QuadratureSpec, funk_hecke_oracle, radial_convolution
from .reduced_energy import PotentialPair, ReducedEnergyModel, landscape, potential_checks, solve_reduced_system

EXIT_OK, EXIT_TOL, EXIT_INPUT = 0, 1, 2

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
CONFIG_SCHEMA = {
    "type": "object",
    "required": ["N", "alpha", "r0", "x0pp", "delta", "q1", "q2"],
    "properties": {
        "N": {"type": "integer", "minimum": 5},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "r0": {"type": "number", "exclusiveMinimum": 0},
        "x0pp": {"type": "array", "items": {"type": "number"}},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "q1": _matrix,
        "q2": _matrix,
        "quartic1": {"type": "number"},
        "quartic2": {"type": "number"},
        "L0": {"type": "number", "exclusiveMinimum": 0},
        "L1": {"type": "number", "exclusiveMinimum": 0},
        "B4": {"type": "number", "exclusiveMinimum": 0},
        "lam": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}


class InputError(Exception):
    pass


def _pointer(path):
    return "/" + "/".join(str(p) for p in path)


def load_config(path: str) -> dict:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise InputError(f"cannot read config {path}: {e.strerror}")
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as e:
        raise InputError(f"config is not valid JSON: {e}")
    errs = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg), key=lambda e: list(e.path))
    if errs:
        raise InputError("; ".join(f"{_pointer(e.absolute_path)}: {e.message}" for e in errs))
    n = cfg["N"] - 1
    if len(cfg["x0pp"]) != cfg["N"] - 2:
        raise InputError(f"/x0pp: expected {cfg['N'] - 2} entries")
    for key in ("q1", "q2"):
        q = cfg[key]
        if len(q) != n or any(len(row) != n for row in q):
            raise InputError(f"/{key}: expected a {n}x{n} matrix")
    return cfg


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not serialisable: {type(o)}")


def _emit(args, payload=None, rows=None, header=None):
    """JSON (sorted keys) or CSV to --out or stdout."""
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        text = buf.getvalue()
    else:
        if payload is None:
            payload = {"columns": header, "rows": rows}
        text = json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _params(args) -> SystemParams:
    return SystemParams(args.N, args.alpha)


# ---------------------------------------------------------------------------
# commands


def cmd_constants(args):
    P = _params(args)
    c = P.constants
    _emit(args, {"N": P.N, "alpha": P.alpha, "two_star_alpha": c.two_star, "mu": P.mu,
                 "C_N_alpha": c.C_N_alpha, "C_N": c.C_N, "I_system": c.I_system,
                 "C_conv_system": c.C_conv_system, "lambda0_N2": c.lambda0_N2,
                 "lambda0_Nalpha": c.lambda0_Nalpha})
    return EXIT_OK


def cmd_spectrum(args):
    P = _params(args)
    tol = args.tol if args.tol is not None else 1e-9
    rep = nondegeneracy_report(P, kmax=args.kmax, tol=tol)
    out = rep.to_dict()
    code = EXIT_OK if rep.anomaly_k is None else EXIT_TOL
    if tol < NUMERIC_FLOOR:
        out["note"] = f"tolerance below numeric floor ({NUMERIC_FLOOR:g})"
    _emit(args, out)
    return code


def cmd_oracle(args):
    N = args.N
    t = args.t if args.t is not None else N - 2.0
    if not 0 < t < N:
        raise DomainError("t must lie in (0, N)")
    thr = args.tol if args.tol is not None else 1e-8
    spec = QuadratureSpec(node_count=args.nodes)
    rows = []
    for k in range(args.kmax + 1):
        cf = funk_hecke_eigenvalue(N, t, k)
        oc = funk_hecke_oracle(N, t, k, spec)
        rows.append((k, cf, oc, abs(oc - cf) / abs(cf)))
    _emit(args, rows=rows, header=["k", "closed_form", "oracle", "rel_err"])
    return EXIT_OK if all(r[3] <= thr for r in rows) else EXIT_TOL


def cmd_bubble(args):
    P = _params(args)
    b = Bubble(P, None, args.lam)
    radii = np.geomspace(1e-2, 1e2, args.n) if args.n > 1 else np.array([1.0])
    pts = np.zeros((radii.size, P.N))
    pts[:, 0] = radii
    if args.action == "eval":
        rows = [(r, u) for r, u in zip(radii, bubble_eval(b, pts))]
        _emit(args, rows=rows, header=["r", "U"])
        return EXIT_OK
    if args.action == "residual":
        rng = np.random.default_rng(args.seed)
        x = rng.standard_normal((args.n, P.N)) * rng.uniform(0.1, 10.0, (args.n, 1)) / args.lam
        d = pde_residual(BubblePair(b), x, details=True)
        rel = float(np.max(np.abs(d["res_u"]) / d["scale_u"]))
        thr = args.tol if args.tol is not None else 1e-9
        _emit(args, {"max_relative_residual": rel, "points": args.n, "threshold": thr})
        return EXIT_OK if rel <= thr else EXIT_TOL
    # conv-check: radial quadrature vs closed form
    p = P.two_star_alpha
    f = lambda s: (P.constants.C_N_alpha * (args.lam / (1.0 + (args.lam * s) ** 2)) ** ((P.N - 2) / 2.0)) ** p
    rows = []
    for r, pt in zip(radii, pts):
        q = radial_convolution(P.mu, f, float(r), P.N, tol=1e-12)
        c = float(riesz_convolution_bubble(P.mu, b, pt))
        rows.append((r, q, c, abs(q - c) / abs(c)))
    thr = args.tol if args.tol is not None else 1e-6
    _emit(args, rows=rows, header=["r", "quadrature", "closed_form", "rel_err"])
    return EXIT_OK if all(r[3] <= thr for r in rows) else EXIT_TOL


def _polygon(cfg, m, lam, window_regime=False):
    P = SystemParams(cfg["N"], cfg["alpha"])
    return PolygonConfig(m, cfg["r0"], tuple(cfg["x0pp"]), lam, P, window_regime,
                         cfg.get("L0", 0.5), cfg.get("L1", 2.0))


def _cutoff(cfg):
    return CutoffSpec(cfg["r0"], tuple(cfg["x0pp"]), cfg["delta"])


def cmd_ansatz(args):
    cfg = load_config(args.config)
    pc = _polygon(cfg, args.m, args.lam)
    cut = _cutoff(cfg)
    pts = structured_samples(pc, cut, n_random=args.n, seed=args.seed)
    Z = ansatz_eval(pc, cut, "Z", pts)
    L = ansatz_neg_laplacian(pc, cut, pts)
    rows = [tuple(x) + (z, l) for x, z, l in zip(pts.tolist(), Z, L)]
    _emit(args, rows=rows, header=[f"x{i + 1}" for i in range(pc.params.N)] + ["Z", "neg_lap_Z"])
    return EXIT_OK


def cmd_probes(args):
    which = args.which.upper()
    if which == "LM":
        cfg = load_config(args.config)
        pc = _polygon(cfg, args.m, args.lam)
        cut = _cutoff(cfg)
        pot = PotentialPair.from_config(cfg)
        pts = structured_samples(pc, cut, n_random=64, seed=args.seed)
        res = residual_lm_probe(pc, cut, pot.K(1), pot.K(2), WeightedNormSpec(pts),
                                MonteCarloSpec(args.samples, args.seed))
        _emit(args, {"norm_estimate": res.norm_estimate, "norm_components": list(res.norm_components),
                     "flagged": res.flagged, "points": len(res.per_point), "lam": args.lam, "m": args.m})
        return EXIT_OK
    inputs = json.loads(args.inputs) if args.inputs else {}
    defaults = {"B2": {"alpha": 3.0, "beta": 2.0, "delta": 1.5, "z_k": [0.0] * 5, "z_j": [10.0] + [0.0] * 4},
                "B3": {"N": 5, "delta": 1.0},
                "B4": {"N": 5, "kernel_exp": 4.0, "eta": 1.5, "lam": 1.0}}
    inp = {**defaults[which], **inputs}
    res = estimate_probe(which, inp, sample_count=args.samples, seed=args.seed)
    info = {k: v for k, v in res.info.items() if k not in ("radii",)}
    _emit(args, {"probe": which, "max_ratio": res.max_ratio, "samples": len(res.samples), "info": info})
    return EXIT_OK if math.isfinite(res.max_ratio) else EXIT_TOL


def _model(cfg, seed):
    return ReducedEnergyModel.from_config(cfg, mc=MonteCarloSpec(50_000, seed))


def cmd_reduced_solve(args):
    cfg = load_config(args.config)
    pot = PotentialPair.from_config(cfg)
    chk = potential_checks(pot)
    if not chk["passed"]:
        _emit(args, {"potential_checks": chk})
        return EXIT_INPUT
    model = _model(cfg, args.seed)
    sol = solve_reduced_system(model, args.m, tol=args.tol if args.tol is not None else 1e-12)
    out = sol.to_dict()
    out["constants"] = {k: {"value": v, "provenance": p} for k, (v, p) in model.B.items()}
    _emit(args, out)
    return EXIT_OK


def cmd_landscape(args):
    cfg = load_config(args.config)
    model = _model(cfg, args.seed)
    lo, hi = args.t_range
    rows = landscape(model, lo, hi, args.n)
    e = (model.params.N - 2) / (model.params.N - 4)
    _emit(args, rows=[(t, t * args.m ** e, g) for t, g in rows], header=["t", "lambda", "balance"])
    return EXIT_OK


def cmd_pohozaev(args):
    cfg = load_config(args.config)
    P = SystemParams(cfg["N"], cfg["alpha"])
    pot = PotentialPair.from_config(cfg)
    lam = cfg.get("lam", args.lam)
    center = np.concatenate([[cfg["r0"], 0.0], cfg["x0pp"]])
    f = BubbleField(Bubble(P, center, lam))
    K1, K2 = (1.0, 1.0) if args.flat else (pot.K(1), pot.K(2))
    mc = MonteCarloSpec(args.samples, args.seed)
    dom = PohozaevDomain.default(cfg["r0"], tuple(cfg["x0pp"]), cfg["delta"])
    if args.which == "d1":
        res = pohozaev_dilation_residual(f, f, K1, K2, dom, mc)
    elif args.which == "d2":
        res = pohozaev_translation_residual(f, f, K1, K2, dom, args.index, mc)
    else:
        pc = PolygonConfig(1, cfg["r0"], tuple(cfg["x0pp"]), lam, P)
        res = pohozaev_scaling_residual(f, f, pc, None, K1, K2, mc)
    out = res.to_dict()
    out["which"] = args.which
    out["consistent_with_zero"] = res.is_zero()
    _emit(args, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tol", type=float, default=None)

    na = argparse.ArgumentParser(add_help=False)
    na.add_argument("--N", type=int, default=6)
    na.add_argument("--alpha", type=float, default=1.0)

    ap = argparse.ArgumentParser(prog="hartree-system", description="Critical Hartree-type Hamiltonian system tools")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", parents=[common, na])
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("spectrum", parents=[common, na])
    p.add_argument("--kmax", type=int, default=50)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("oracle", parents=[common])
    p.add_argument("--N", type=int, default=6)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--nodes", type=int, default=64)
    p.set_defaults(func=cmd_oracle, format="csv")

    p = sub.add_parser("bubble", parents=[common, na])
    p.add_argument("action", choices=("eval", "residual", "conv-check"))
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--n", type=int, default=20)
    p.set_defaults(func=cmd_bubble)

    p = sub.add_parser("ansatz", parents=[common])
    p.add_argument("--config", required=True)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--lam", type=float, default=64.0)
    p.add_argument("--n", type=int, default=16)
    p.set_defaults(func=cmd_ansatz, format="csv")

    p = sub.add_parser("probes", parents=[common])
    p.add_argument("which", choices=("b2", "b3", "b4", "lm"))
    p.add_argument("--inputs", default=None, help="JSON object overriding the probe inputs")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--config", default=None)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--lam", type=float, default=64.0)
    p.set_defaults(func=cmd_probes)

    p = sub.add_parser("reduced-solve", parents=[common])
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_reduced_solve)

    p = sub.add_parser("landscape", parents=[common])
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--t-range", type=float, nargs=2, default=(0.05, 2.0))
    p.add_argument("--n", type=int, default=101)
    p.set_defaults(func=cmd_landscape, format="csv")

    p = sub.add_parser("pohozaev", parents=[common])
    p.add_argument("--which", choices=("d1", "d2", "d3"), required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--lam", type=float, default=30.0)
    p.add_argument("--index", type=int, default=3)
    p.add_argument("--flat", action="store_true", help="use K1 = K2 = 1")
    p.set_defaults(func=cmd_pohozaev)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, DomainError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT
    except AccuracyError as e:
        sys.stderr.write(f"accuracy: {e}\n")
        return EXIT_TOL


if __name__ == "__main__":
    sys.exit(main())
