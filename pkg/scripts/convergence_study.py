"""Mesh convergence of the disk Laplacian and the centred single-pole operator.

Prints eigenvalue errors against the Bessel oracles over uniform refinements
and the observed convergence rate between consecutive levels.
"""
import argparse

import numpy as np

from ablab.eig import solve_lowest
from ablab.fem import assemble_laplacian, assemble_magnetic
from ablab.geometry import DomainSpec, GradingPolicy, generate_mesh, mesh_quality, refine_uniform
from ablab.oracles import disk_laplacian_lambda1, single_pole_disk_lambda1
from ablab.potential import single_pole


def study(label, meshes, solve, exact):
    print(label)
    errs, hs = [], []
    for level, m in enumerate(meshes):
        lam = solve(m)
        err = lam / exact - 1
        errs.append(abs(err))
        hs.append(mesh_quality(m)["h_max"])
        rate = "" if level == 0 else f"  rate {np.log(errs[-2] / errs[-1]) / np.log(hs[-2] / hs[-1]):.2f}"
        print(f"  level {level}  dofs {m.n_vertices:7d}  lambda {lam:.10f}  rel err {err:+.3e}{rate}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.2)
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()
    disk = DomainSpec.disk()

    meshes = [generate_mesh(disk, h_max=args.h)]
    for _ in range(args.levels):
        meshes.append(refine_uniform(meshes[-1]))
    study("disk Laplacian", meshes, lambda m: solve_lowest(assemble_laplacian(m), 1).values[0], disk_laplacian_lambda1())

    pole = single_pole()
    meshes = [generate_mesh(disk, poles=[(0.0, 0.0)], h_max=args.h, grading=GradingPolicy(((0.0, 0.0),), args.h / 10, 1.2))]
    for _ in range(max(args.levels - 1, 0)):
        meshes.append(refine_uniform(meshes[-1]))
    # pi^2 is a double eigenvalue; the lowest computed value is enough here
    study("centred half-flux pole", meshes, lambda m: solve_lowest(assemble_magnetic(m, pole), 2).values[0],
          single_pole_disk_lambda1())


if __name__ == "__main__":
    main()
