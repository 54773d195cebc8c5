#!/usr/bin/env python3
"""Show the difficulty/competence equilibrium behaving like a contraction.

Solves random target-rate instances from scattered starting points, reports
the worst observed contraction ratio and the spread between limits, then
sweeps the single-problem case so the equilibrium curve D*(s*) is visible.

Example:
    python3 scripts/fixed_point_demo.py --instances 20 --trajectory-out traj.csv
"""

import argparse
import sys

import numpy as np

from cdas.fixed_point import EquilibriumProblem, solve, write_trajectory_csv


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instances", type=int, default=20)
    parser.add_argument("--size", type=int, default=50, help="problems per instance")
    parser.add_argument("--inits", type=int, default=5, help="starting points per instance")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tolerance", type=float, default=1e-10)
    parser.add_argument(
        "--trajectory-out", default=None, help="CSV of per-iteration deltas for one solve"
    )
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    rng = np.random.default_rng(args.seed)

    worst_ratio = 0.0
    worst_iters = 0
    worst_spread = 0.0
    keep = None
    for _ in range(args.instances):
        s_star = rng.uniform(0.0, 1.0, size=args.size)
        limits = []
        for _ in range(args.inits):
            problem = EquilibriumProblem(
                s_star=s_star,
                init_d=rng.uniform(-5.0, 5.0, size=args.size),
                init_c=float(rng.uniform(-5.0, 5.0)),
            )
            solution = solve(problem, tolerance=args.tolerance)
            keep = solution
            if solution.contraction_ratios:
                worst_ratio = max(worst_ratio, max(solution.contraction_ratios))
            worst_iters = max(worst_iters, solution.iterations)
            limits.append(solution.c_star)
        worst_spread = max(worst_spread, max(limits) - min(limits))

    print(f"{args.instances} instances x {args.inits} starts, size {args.size}:")
    print(f"  worst contraction ratio  {worst_ratio:.6f}  (theory bound 0.5)")
    print(f"  worst iteration count    {worst_iters}")
    print(f"  spread between limits    {worst_spread:.3e}")

    print("\nsingle-problem equilibrium sweep (C* = -D*):")
    print(f"  {'s*':>5} {'D*':>12} {'C*':>12} {'iters':>6}")
    for s in (0.1, 0.3, 0.5, 0.7, 0.9):
        solution = solve(EquilibriumProblem(s_star=np.array([s])))
        print(
            f"  {s:>5.2f} {solution.d_star[0]:>12.8f} {solution.c_star:>12.8f} "
            f"{solution.iterations:>6}"
        )

    if args.trajectory_out and keep is not None:
        write_trajectory_csv(keep.trajectory, args.trajectory_out)
        print(f"\nper-iteration deltas written to {args.trajectory_out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
