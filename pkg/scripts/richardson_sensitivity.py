"""Sensitivity of the extrapolated sup|U_BO| for the |phi|^1.5 flow to the fit choices.

The leading correction goes as C'^(1/8), so six decades of C' shrink it by
less than a factor of six and the extrapolated limit depends on how many
powers are fitted and over how many decades. Prints the limit as a
percentage of the initial sup for a grid of those choices.

Usage: python3 scripts/richardson_sensitivity.py [--per-decade N]
"""
import argparse

import numpy as np

from qflow.boflow import classify, decade_grid, default_jobs, extrapolate_flow, flow_exponents, flow_sweep
from qflow.potentials import PowerLaw


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--per-decade", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=default_jobs())
    args = ap.parse_args()

    spec = PowerLaw(1.0, 1.5)
    r = flow_sweep(1.0, spec, cprimes=decade_grid(1.0, 1e-6, args.per_decade), jobs=args.jobs)
    cls = classify(spec)
    half = np.abs(r.phi) <= np.abs(r.phi).max() / 2 + 1e-12
    windows = {"full grid": np.ones_like(half), "|phi| <= max/2": half}
    for label, mask in windows.items():
        sup = np.max(np.abs(r.U[:, mask]), axis=1)
        print(f"{label}: sup {sup[0]:.4f} -> {sup[-1]:.4f}")
        print("  decades  " + "  ".join(f"{k} terms" for k in (2, 3, 4)))
        for decades in (2, 3, 4, 6):
            cells = []
            for terms in (2, 3, 4):
                lim = extrapolate_flow(r.cprimes, sup, flow_exponents(cls, terms), decades)
                cells.append(f"{100 * abs(lim) / sup[0]:6.2f}%")
            print(f"  {decades:7d}  " + "  ".join(cells))


if __name__ == "__main__":
    main()
