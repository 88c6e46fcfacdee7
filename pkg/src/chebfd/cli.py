"""Command line front end: ``chebfd {gen,bounds,dos,design,solve,bench}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .config import RunConfig, load_config

log = logging.getLogger("chebfd")

# flag -> (section, key, nargs)
FLAGS = {
    "--model": ("matrix", "model", None),
    "--matrix": ("matrix", "path", None),
    "--dim": ("matrix", "dim", None),
    "--Lx": ("matrix", "L_x", None),
    "--Ly": ("matrix", "L_y", None),
    "--Lz": ("matrix", "L_z", None),
    "--hopping": ("matrix", "t", None),
    "--disorder": ("matrix", "V", None),
    "--boundary": ("matrix", "boundary", None),
    "--spectrum": ("matrix", "spectrum", 2),
    "--matrix-seed": ("matrix", "seed", None),
    "--bounds": ("probe", "bounds", 2),
    "--lanczos-iters": ("probe", "lanczos_iters", None),
    "--moments": ("probe", "moments", None),
    "--samples": ("probe", "samples", None),
    "--dos": ("probe", "dos", None),
    "--target": ("filter", "target", 2),
    "--kernel": ("filter", "kernel", None),
    "--degree": ("filter", "degree", None),
    "--search-vectors": ("filter", "search_vectors", None),
    "--margin": ("filter", "margin", None),
    "--epsilon": ("filter", "epsilon", None),
    "--max-iters": ("solver", "max_iters", None),
    "--drop-tol": ("solver", "drop_tol", None),
    "--dump-vectors": ("solver", "dump_vectors", 0),
    "--block-sizes": ("bench", "block_sizes", "+"),
    "--bench-degree": ("bench", "degree", None),
    "--bandwidth": ("bench", "bandwidth", None),
    "--seed": ("run", "seed", None),
    "--threads": ("run", "threads", None),
    "--deterministic": ("run", "deterministic", 0),
    "--out": ("run", "out", None),
}

COMMANDS = {
    "gen": "write a model matrix in Matrix Market format",
    "bounds": "estimate the spectral interval with Lanczos",
    "dos": "estimate the density of states with KPM",
    "design": "choose the filter degree for a target interval",
    "solve": "compute the eigenpairs in a target interval",
    "bench": "time the filter kernel against the roofline model",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chebfd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="INI file; command line flags take precedence")
        for flag, (section, key, nargs) in FLAGS.items():
            dest = f"{section}.{key}"
            if nargs == 0:
                p.add_argument(flag, dest=dest, action="store_const", const="true")
            elif nargs is None:
                p.add_argument(flag, dest=dest, metavar=key.upper())
            else:
                p.add_argument(flag, dest=dest, nargs=nargs, metavar=key.upper())
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {}
    for section, key, _ in FLAGS.values():
        value = getattr(args, f"{section}.{key}")
        if isinstance(value, list):
            value = " ".join(value)
        overrides[(section, key)] = value
    return load_config(args.config, overrides)


def build_matrix(cfg: RunConfig):
    from .mmio import read_matrix_market
    from .models import Boundary, LatticeSpec, diag_flat, diag_linear, graphene, \
        topological_insulator

    m = cfg.matrix
    if m.model == "file" or m.path:
        if not m.path:
            raise ValueError("model 'file' needs --matrix PATH")
        return read_matrix_market(m.path)
    if m.model == "flat":
        return diag_flat(m.dim, m.spectrum)
    if m.model == "linear":
        return diag_linear(m.dim)
    if m.model in ("topi", "graphene"):
        default = Boundary.PERIODIC_XY_OPEN_Z if m.model == "topi" else Boundary.PERIODIC_ALL
        spec = LatticeSpec(m.L_x, m.L_y, m.L_z, m.t, m.V, None,
                           Boundary(m.boundary) if m.boundary else default, m.seed)
        return topological_insulator(spec) if m.model == "topi" else graphene(spec)
    raise ValueError(f"unknown model {m.model!r}")


def _bounds(cfg, A):
    from .probe import lanczos_bounds

    if cfg.probe.bounds is not None:
        return tuple(cfg.probe.bounds)
    return lanczos_bounds(A, cfg.probe.lanczos_iters, seed=cfg.run.seed)


def _dos(cfg, A, bounds):
    from .probe import AnalyticDos, kpm_dos

    kind = cfg.probe.dos
    if kind == "flat":
        return AnalyticDos.flat(A.dim, cfg.matrix.spectrum)
    if kind == "linear":
        return AnalyticDos.linear(A.dim)
    if kind == "kpm":
        return kpm_dos(A, bounds, cfg.probe.moments, cfg.probe.samples, seed=cfg.run.seed)
    raise ValueError(f"unknown dos kind {kind!r}")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
    log.info("wrote %s", path)


def cmd_gen(cfg, out):
    from .mmio import write_matrix_market

    A = build_matrix(cfg)
    path = os.path.join(out, "matrix.mtx")
    write_matrix_market(path, A, comment=f"model={cfg.matrix.model}")
    info = {"path": path, "dim": A.dim, "nnz": A.nnz, "nnz_per_row": A.nnz_per_row,
            "scalar": A.kind.value}
    print(json.dumps(info))
    return info


def cmd_bounds(cfg, out):
    from .probe import lanczos_bounds

    A = build_matrix(cfg)
    a, b = lanczos_bounds(A, cfg.probe.lanczos_iters, seed=cfg.run.seed)
    info = {"a": a, "b": b, "lanczos_iters": cfg.probe.lanczos_iters}
    _write_json(os.path.join(out, "bounds.json"), info)
    print(json.dumps(info))
    return info


def cmd_dos(cfg, out):
    if cfg.probe.dos != "kpm":
        raise ValueError("the dos command estimates a density; use --dos kpm")
    A = build_matrix(cfg)
    bounds = _bounds(cfg, A)
    dos = _dos(cfg, A, bounds)
    lam, rho = dos.grid()
    with open(os.path.join(out, "dos.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "rho"])
        w.writerows(zip(lam.tolist(), rho.tolist()))
    info = {"bounds": list(bounds), "M": cfg.probe.moments, "R": cfg.probe.samples,
            "integral": dos.total(), "moments": dos.moments.tolist()}
    if cfg.filter.target is not None:
        info["target_count"] = dos.count(*cfg.filter.target)
    _write_json(os.path.join(out, "dos.json"), info)
    print(json.dumps({k: v for k, v in info.items() if k != "moments"}))
    return info


def cmd_design(cfg, out):
    from .design import IntervalConfig, choose_parameters, optimize_degree
    from .filters import FilterPolynomial, KernelKind

    f = cfg.filter
    if f.target is None:
        raise ValueError("design needs --target LO HI")
    kind = KernelKind.parse(f.kernel)
    if f.margin is not None:
        bounds = tuple(cfg.probe.bounds or (-1.0, 1.0))
        icfg = IntervalConfig(tuple(f.target), f.margin, bounds)
        res = optimize_degree(icfg, kind, f.epsilon, max(f.search_vectors, 1))
        n_t = None
    else:
        if not f.search_vectors:
            raise ValueError("design needs --margin or --search-vectors")
        A = build_matrix(cfg)
        bounds = _bounds(cfg, A)
        icfg, res, n_t = choose_parameters(_dos(cfg, A, bounds), f.target, f.search_vectors,
                                           kind, f.epsilon, bounds)
    info = res.to_dict()
    info.update(target=list(icfg.target), search_margin=icfg.search_margin,
                bounds=list(icfg.bounds), n_target_estimate=n_t)
    with open(os.path.join(out, "eta_curve.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N_p", "sigma", "eta"])
        w.writerows(res.curve)
    FilterPolynomial.build(icfg.target, icfg.bounds, res.N_p_opt, kind).write_table(
        os.path.join(out, "filter_coeffs.txt"))
    _write_json(os.path.join(out, "design.json"), info)
    print(json.dumps(info))
    return info


def cmd_solve(cfg, out):
    from .filters import KernelKind
    from .mmio import save_block
    from .solver import SolverOptions, solve

    f = cfg.filter
    if f.target is None:
        raise ValueError("solve needs --target LO HI")
    A = build_matrix(cfg)
    bounds = cfg.probe.bounds
    dos = None
    if cfg.probe.dos != "kpm":
        bounds = _bounds(cfg, A)
        dos = _dos(cfg, A, bounds)
    opts = SolverOptions(tuple(f.target), f.epsilon, f.search_vectors, f.degree,
                         KernelKind.parse(f.kernel), cfg.solver.max_iters, cfg.run.seed,
                         cfg.probe.moments, cfg.probe.samples, cfg.run.deterministic,
                         cfg.probe.lanczos_iters, cfg.solver.drop_tol,
                         None if bounds is None else tuple(bounds), dos)
    rep = solve(A, opts)
    rep.write_json(os.path.join(out, "report.json"))
    rep.write_history(os.path.join(out, "history.csv"))
    order = np.argsort(rep.values)
    with open(os.path.join(out, "eigenvalues.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eigenvalue", "residual"])
        w.writerows(zip(rep.values[order].tolist(), rep.residuals[order].tolist()))
    if cfg.solver.dump_vectors:
        save_block(os.path.join(out, "eigenvectors.bin"),
                   np.ascontiguousarray(rep.vectors[:, order]))
    summary = {k: v for k, v in rep.to_dict().items() if k not in ("eigenvalues", "residuals",
                                                                    "history")}
    print(json.dumps(summary))
    return rep


def cmd_bench(cfg, out):
    from .bench import bench_filter

    A = build_matrix(cfg)
    rep = bench_filter(A, cfg.bench.block_sizes, cfg.bench.degree,
                       bandwidth=cfg.bench.bandwidth, seed=cfg.run.seed)
    rep.write_json(os.path.join(out, "bench.json"))
    print(rep.table())
    return rep


HANDLERS = {"gen": cmd_gen, "bounds": cmd_bounds, "dos": cmd_dos, "design": cmd_design,
            "solve": cmd_solve, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (KeyError, ValueError, OSError) as err:
        print(f"chebfd: configuration error: {err}", file=sys.stderr)
        return 2
    from .linalg import set_threads

    set_threads(cfg.run.threads)
    os.makedirs(cfg.run.out, exist_ok=True)
    try:
        HANDLERS[args.command](cfg, cfg.run.out)
    except (ValueError, OSError) as err:
        print(f"chebfd {args.command}: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
