"""Unit-disk sweep with the default a values; writes CSV, JSON and SVG reports."""
import argparse
import logging
import time

from ablab.harness import SweepConfig, emit_report, run_sweep
from ablab.oracles import predicted_slope


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="disk_sweep")
    ap.add_argument("--h-max", type=float, default=0.05)
    ap.add_argument("--refine", type=int, default=0)
    ap.add_argument("--a", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025, 0.0125])
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = SweepConfig(a_values=tuple(args.a), h_max=args.h_max, refinement_levels=args.refine, output_dir=args.out)
    t0 = time.perf_counter()
    res = run_sweep(cfg)
    emit_report(res.records, res.fit, cfg.output_dir, graphs=res.graphs)
    print(f"{'a':>8} {'lam^a-lam':>10} {'nodal gap':>10} {'segment gap':>11} {'bound(0.5)':>10} {'d_a':>8} {'log_ratio':>9}")
    for r in res.records:
        print(
            f"{r.a:8.4g} {r.lambda_N_a - r.lambda_N:10.5f} {r.lambda_slit_nodal / r.lambda_N_a - 1:10.2e} "
            f"{r.lambda_slit_segment / r.lambda_N_a - 1:11.2e} {r.upper_bound.get(0.5, float('nan')):10.4f} "
            f"{r.d_a:8.4g} {r.log_ratio:9.4f}"
        )
    if res.fit:
        oracle = predicted_slope()
        print(f"slope {res.fit.slope:.5f}  oracle {oracle:.5f}  relative error {abs(res.fit.slope / oracle - 1):.3f}")
    print(f"elapsed {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
