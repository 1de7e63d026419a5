"""Upper bound excess over lambda_1 against 1/((1 - tau)|log a|) on the unit disk."""
import argparse

from ablab.bounds import assemble_M_matrix, leading_term, max_eig_quadform, upper_bound
from ablab.eig import SpectrumSlice, orient_at_origin, solve_lowest, value_at_origin
from ablab.fem import assemble_laplacian, assemble_magnetic
from ablab.geometry import DomainSpec, GradingPolicy, generate_mesh
from ablab.potential import PoleConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, nargs="+", default=[0.05, 0.025, 0.0125, 0.005])
    ap.add_argument("--tau", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--h-max", type=float, default=0.05)
    args = ap.parse_args()
    print(f"{'a':>8} {'tau':>5} {'lam^a-lam':>10} {'bound-lam':>10} {'max eig M':>10} {'leading':>9} {'ratio':>6}")
    for a in args.a:
        cfg = PoleConfig(a)
        poles = (cfg.a_minus, cfg.a_plus)
        mesh = generate_mesh(DomainSpec.disk(), poles=poles, h_max=args.h_max, grading=GradingPolicy(poles, a / 10, 1.2))
        L = assemble_laplacian(mesh)
        sl = solve_lowest(L, 1)
        sl = SpectrumSlice((orient_at_origin(sl.pairs[0], mesh, L),), sl.gap_to_next)
        u0 = value_at_origin(sl.pairs[0], mesh, L)
        S = assemble_magnetic(mesh, cfg)
        lam_a = solve_lowest(S, 1).values[0]
        lam = sl.values[0]
        for tau in args.tau:
            excess = upper_bound(mesh, S, sl, L, cfg, tau) - lam
            q = max_eig_quadform(assemble_M_matrix(mesh, sl, L, cfg, tau))
            lead = leading_term(u0**2, a, tau)
            print(f"{a:8.4g} {tau:5.2f} {lam_a - lam:10.5f} {excess:10.5f} {q:10.5f} {lead:9.5f} {excess / lead:6.3f}")
    print("ratio = (bound - lambda_1) / (2 pi u_1(0)^2 / ((1 - tau)|log a|)); expected to drift towards 1 as a -> 0")


if __name__ == "__main__":
    main()
