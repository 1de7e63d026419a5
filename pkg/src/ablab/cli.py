"""Command-line entry point ``ab-lab``.

Exit codes: 0 success, 2 precondition failure or bad input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .bounds import CutoffParams, cutoff_energy, cutoff_mass_defect
from .eig import ConvergenceError
from .geometry import DomainSpec, GradingPolicy, MeshError, generate_mesh, mesh_quality, write_mesh
from .harness import NumericalError, PreconditionError, emit_report, load_config, run_sweep
from .oracles import ORACLES
from .potential import PoleConfig

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3


def _domain(args) -> DomainSpec:
    if args.domain == "disk":
        return DomainSpec.disk(args.radius, args.segments)
    if args.domain == "square":
        r = args.radius
        return DomainSpec.polygon([(-r, -r), (r, -r), (r, r), (-r, r)])
    pts = [tuple(float(t) for t in p.replace(",", " ").split()) for p in args.vertices.split(";") if p.strip()]
    return DomainSpec.polygon(pts)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.output_dir
    res = run_sweep(cfg)
    paths = emit_report(res.records, res.fit, out, formats=tuple(args.formats.split(",")), graphs=res.graphs)
    for r in res.records:
        status = "ok" if not r.errors else "; ".join(r.errors)
        print(f"a={r.a:<8g} lambda_N={r.lambda_N:.8f} lambda_N_a={r.lambda_N_a:.8f} log_ratio={r.log_ratio:.4f} [{status}]")
    if res.fit is None:
        print(f"fit failed: {res.fit_error}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"slope={res.fit.slope:.6f} predicted={res.fit.predicted:.6f} relative_error={res.fit.relative_error:.4f}")
    print(f"reports written to {paths.get('csv', out)}")
    return EXIT_OK


def cmd_mesh(args) -> int:
    domain = _domain(args)
    poles, grading = (), None
    if args.a is not None:
        cfg = PoleConfig(args.a)
        poles = (cfg.a_minus, cfg.a_plus)
        target = args.grading if args.grading is not None else 0.1 * args.a
        grading = GradingPolicy(poles, target, args.growth)
    mesh = generate_mesh(domain, poles=poles, h_max=args.h, grading=grading)
    write_mesh(mesh, args.out)
    q = mesh_quality(mesh)
    print(" ".join(f"{k}={v:g}" for k, v in q.items()))
    return EXIT_OK


def cmd_oracle(args) -> int:
    print(repr(float(ORACLES[args.which]())))
    return EXIT_OK


def cmd_check(args) -> int:
    p = CutoffParams(args.eps, args.tau)
    closed, quad = cutoff_energy(p)
    rel = abs(closed - quad) / abs(closed)
    defect = cutoff_mass_defect(p)
    bound = np.pi * p.epsilon ** (2 * p.tau)
    ok = rel <= 1e-8 and np.pi * p.epsilon**2 <= defect <= bound
    print(f"energy_closed={closed!r} energy_quadrature={quad!r} relative_error={rel:.3e}")
    print(f"mass_defect={defect!r} bound={bound!r} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ab-lab", description="Two-pole Aharonov-Bohm spectral laboratory")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run a sweep over a and write reports")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None, help="overrides output_dir from the config")
    s.add_argument("--formats", default="csv,json,svg")
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("mesh", help="generate and save a mesh")
    m.add_argument("--domain", choices=("disk", "square", "polygon"), default="disk")
    m.add_argument("--radius", type=float, default=1.0, help="disk radius or square half-width")
    m.add_argument("--segments", type=int, default=256)
    m.add_argument("--vertices", default=None, help="polygon vertices 'x y; x y; ...'")
    m.add_argument("--h", type=float, default=0.05)
    m.add_argument("--a", type=float, default=None, help="mark poles at (+-a, 0) and grade towards them")
    m.add_argument("--grading", type=float, default=None, help="mesh size at the poles (default a/10)")
    m.add_argument("--growth", type=float, default=1.2)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_mesh)

    o = sub.add_parser("oracle", help="print a closed-form reference value")
    osub = o.add_subparsers(dest="oracle", required=True)
    ob = osub.add_parser("bessel")
    ob.add_argument("--which", choices=sorted(ORACLES), required=True)
    ob.set_defaults(func=cmd_oracle)

    c = sub.add_parser("check", help="run a self-check")
    csub = c.add_subparsers(dest="check", required=True)
    cc = csub.add_parser("cutoff")
    cc.add_argument("--eps", type=float, required=True)
    cc.add_argument("--tau", type=float, required=True)
    cc.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "mesh" and args.domain == "polygon" and not args.vertices:
        print("error: --vertices is required for polygon domains", file=sys.stderr)
        return EXIT_PRECONDITION
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NumericalError, ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MeshError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
