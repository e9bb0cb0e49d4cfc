#!/usr/bin/env python3
"""Print the small-divisor chain for omega = (1, alpha) at a few decay rates.

    python scripts/liouville_report.py [--kappa 0.3 0.549 0.56]
"""
import argparse

from qpwave.diagnostics import KAPPA_THRESHOLD, TsugawaParams, liouville_witness, verify_divergence_chain


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kappa", type=float, nargs="+", default=[0.3, KAPPA_THRESHOLD, 0.56])
    args = ap.parse_args()
    for n in (1, 2, 3):
        w = liouville_witness(n)
        print(f"level {n}: log10 q = {w.log10_q:.6g}, log10 C = {w.log10_C:.10g}, log10(-log10 C) = {w.log10_neg_log10_C:.6g}")
    for kappa in args.kappa:
        rep = verify_divergence_chain(TsugawaParams((0.0, 0.0), kappa))
        print(f"\nkappa = {kappa:.6g}  (threshold {KAPPA_THRESHOLD:.6g}); all links hold: {rep.all_hold}")
        for link in rep.links:
            flag = "ok " if link.holds else "BAD"
            print(f"  {flag} level {link.level} {link.name:<11} margin_ln = {link.margin_ln:.6g} {link.note}")
        for level, t in rep.terms_log10.items():
            print(f"  level {level} Tsugawa term log10 = {t:.6g}")


if __name__ == "__main__":
    main()
