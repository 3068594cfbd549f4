"""Solve a random convex problem with the limited-memory backend and report timing.

Usage: python3 scripts/large_lbfgs.py [n] [m] [m_eq] [seed]   (default 500 300 100 0)
"""

import sys
import time

from dustsqp import SolverConfig, sqp_solve
from dustsqp.problems import random_convex_problem


def main() -> None:
    n, m, m_eq, seed = (list(map(int, sys.argv[1:])) + [500, 300, 100, 0][len(sys.argv) - 1:])[:4]
    p = random_convex_problem(n=n, m=m, m_eq=m_eq, seed=seed)
    cfg = SolverConfig(hessian_backend="lbfgs", max_inner_sweeps=2000, max_outer=500)
    t0 = time.perf_counter()
    r = sqp_solve(p, cfg)
    elapsed = time.perf_counter() - t0
    print(f"n={n} m={m} m_eq={m_eq} seed={seed}")
    print(f"status={r.status.value} iters={r.outer_iters} n_f={r.n_f} f={r.f_final:.8e}")
    print(f"v_inf={r.v_inf_final:.2e} eps_opt={r.eps_opt:.2e} rho={r.rho_final:.4g} "
          f"cap_hits={r.cap_hits} time={elapsed:.2f}s")


if __name__ == "__main__":
    main()
