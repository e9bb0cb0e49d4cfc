#!/usr/bin/env python3
"""Run every equation preset on the one-frequency desk problem and tabulate
certificate, convergence, oracle agreement and quadrature refinement.

    python scripts/desk_experiments.py [--json out.json]
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from qpwave.lattice import FrequencyVector
from qpwave.models import EQUATIONS, build_model
from qpwave.oracle import OdeParams, expRK4_solve, measure_order
from qpwave.qpfield import CoefficientField, norm_vk
from qpwave.solver import SolverParams, certify, picard_solve, quadrature_refinement


def run(equation: str, R: float, k: float, kappa: float, eps: float, N: int, M: int) -> dict:
    omega = FrequencyVector((1.0,))
    model = build_model(equation)
    u0 = CoefficientField.from_entries(omega, {(1,): 0.1, (-1,): 0.1}, real=True, radius=N)
    cert = certify(model, omega, R, k, kappa, eps)
    params = SolverParams.from_certificate(cert, N, M)
    start = time.perf_counter()
    res = picard_solve(u0, model, params, cert)
    elapsed = time.perf_counter() - start
    ode = expRK4_solve(u0, model, OdeParams.for_horizon(params.T, 8 * M, N))
    dev = float(np.max(np.abs(ode.values[::8] - res.trajectory.values)))
    refine = quadrature_refinement(u0, model, params)
    return {
        "equation": equation,
        "norm_u0": norm_vk(u0, k),
        "gamma": cert.gamma,
        "T": cert.T,
        "q": cert.q,
        "iterations": res.iterations,
        "max_ratio": max(res.ratios[1:], default=0.0),
        "oracle_dev": dev,
        "order_T1": measure_order(u0, model, 1.0, 64, N)["order"],
        "residual_M": refine["residual_M"],
        "refine_ratio": refine["ratio"],
        "picard_s": elapsed,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--R", type=float, default=0.6)
    ap.add_argument("--k", type=float, default=1.0)
    ap.add_argument("--kappa", type=float, default=0.5)
    ap.add_argument("--epsilon", type=float, default=0.25)
    ap.add_argument("--N", type=int, default=8)
    ap.add_argument("--M", type=int, default=32)
    ap.add_argument("--json", help="also write the rows to this file")
    args = ap.parse_args()

    rows = [run(eq, args.R, args.k, args.kappa, args.epsilon, args.N, args.M) for eq in EQUATIONS]
    cols = ["equation", "gamma", "T", "q", "iterations", "max_ratio", "oracle_dev", "order_T1", "refine_ratio"]
    print("  ".join(f"{c:>12}" for c in cols))
    for r in rows:
        print("  ".join(f"{r[c]:>12.4g}" if isinstance(r[c], float) else f"{r[c]:>12}" for c in cols))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
