#!/usr/bin/env python3
"""Scaling constants eta0, N0 of the Lanczos(mu=2) filter versus the interval centre.

    python3 scripts/table2.py                  # c/S_w = 0, 0.1, ..., 0.9
    python3 scripts/table2.py --kernel jackson --centers 0 0.5
"""
import argparse
import sys

import numpy as np

from chebfd.design import LANCZOS_SCALING_TABLE, fit_scaling_constants
from chebfd.filters import KernelKind


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kernel", default="lanczos:2")
    ap.add_argument("--centers", type=float, nargs="+", default=list(np.arange(10) / 10))
    ap.add_argument("--delta", type=float, default=1e-3, help="delta / S_w")
    args = ap.parse_args(argv)
    kind = KernelKind.parse(args.kernel)
    ref = {round(r[0], 3): (r[2], r[1]) for r in LANCZOS_SCALING_TABLE}
    show_ref = str(kind) == "lanczos:2" and args.delta == 1e-3
    print(f"{'c/S_w':>6} {'eta0':>7} {'N0':>7}" + ("   ref eta0  ref N0" if show_ref else ""))
    for c in args.centers:
        eta0, n0 = fit_scaling_constants(kind, c, args.delta)
        line = f"{c:6.2f} {eta0:7.3f} {n0:7.3f}"
        if show_ref and round(c, 3) in ref:
            line += "   {:8.2f} {:7.2f}".format(*ref[round(c, 3)])
        print(line, flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
