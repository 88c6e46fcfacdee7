#!/usr/bin/env python3
"""Filter quality eta(N_p) for each kernel on a centred target interval.

    python3 scripts/eta_curve.py --delta 1e-3 --margin 1e-3 --csv eta.csv
"""
import argparse
import csv
import sys

from chebfd.design import IntervalConfig, optimize_degree
from chebfd.filters import KernelKind


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, default=1e-3)
    ap.add_argument("--margin", type=float, default=1e-3)
    ap.add_argument("--center", type=float, default=0.0)
    ap.add_argument("--kernels", nargs="+", default=["lanczos:2", "jackson", "none"])
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    cfg = IntervalConfig.centered(args.center, args.delta, args.margin)
    rows = []
    for name in args.kernels:
        res = optimize_degree(cfg, KernelKind.parse(name))
        print(f"{name:>10}: N_p_opt = {res.N_p_opt:6d}  eta_opt = {res.eta_opt:8.1f}  "
              f"sigma = {res.sigma:.4f}", flush=True)
        rows += [(name, n, s, e) for n, s, e in res.curve]
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kernel", "N_p", "sigma", "eta"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
