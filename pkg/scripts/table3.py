#!/usr/bin/env python3
"""Numerical effort on the D = 40000 diagonal test matrices (flat / linear DOS).

    python3 scripts/table3.py --shape flat --search-vectors 150 200 400
    python3 scripts/table3.py --shape linear --search-vectors 200 400 --csv effort.csv
"""
import argparse
import csv
import sys
import time

import numpy as np

from chebfd.design import search_margin_for
from chebfd.filters import KernelKind
from chebfd.models import diag_flat, diag_linear
from chebfd.probe import AnalyticDos
from chebfd.solver import SolverOptions, solve


def rep_dos(shape, dim):
    return AnalyticDos.flat(dim) if shape == "flat" else AnalyticDos.linear(dim)


def run(shape, N_S, dim, n_target, kernel, epsilon, seed):
    if shape == "flat":
        A, dos = diag_flat(dim), AnalyticDos.flat(dim)
        half = n_target / dim                  # flat density: D/2 per unit length
    else:
        A, dos = diag_linear(dim), AnalyticDos.linear(dim)
        half = np.sqrt(n_target / dim)         # N(|x| < d) = D d^2
    opts = SolverOptions((-half, half), epsilon=epsilon, N_S=N_S, kernel=kernel, seed=seed,
                         bounds=(-1.0, 1.0), dos=dos)
    t0 = time.perf_counter()
    rep = solve(A, opts)
    return rep, time.perf_counter() - t0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shape", choices=("flat", "linear"), default="flat")
    ap.add_argument("--search-vectors", type=int, nargs="+", default=[150, 200, 400])
    ap.add_argument("--dim", type=int, default=40000)
    ap.add_argument("--n-target", type=int, default=100)
    ap.add_argument("--kernel", default="lanczos:2")
    ap.add_argument("--epsilon", type=float, default=1e-12)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)

    kernel = KernelKind.parse(args.kernel)
    rows = []
    print(f"{'N_S':>5} {'delta_p':>10} {'N_p':>6} {'eta':>7} {'spMVMs':>10} {'iters':>5} "
          f"{'found':>5} {'time[s]':>8}")
    for N_S in args.search_vectors:
        rep, dt = run(args.shape, N_S, args.dim, args.n_target, kernel, args.epsilon, args.seed)
        d = rep.design
        margin = search_margin_for(rep_dos(args.shape, args.dim), rep.target, N_S,
                                   bounds=(-1.0, 1.0))
        row = dict(N_S=N_S, N_p=rep.N_p, eta=d.eta_opt if d else float("nan"),
                   spmvms=rep.total_spmvms, iters=rep.iterations, found=rep.num_found,
                   converged=rep.converged, seconds=dt, margin=margin)
        rows.append(row)
        print(f"{N_S:5d} {margin:10.3e} {rep.N_p:6d} {row['eta']:7.1f} {rep.total_spmvms:10.3e} "
              f"{rep.iterations:5d} {rep.num_found:5d} {dt:8.1f}", flush=True)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
