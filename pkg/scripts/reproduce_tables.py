"""Solve the registered problems and print them next to the stored reference rows.

Usage: python3 scripts/reproduce_tables.py [feasible|infeasible|beta_phi_05|beta_phi_099] [--out FILE.csv]
"""

import argparse

from dustsqp.cli import run_suite, write_csv
from dustsqp.config import SolverConfig
from dustsqp.reference import BETA_PHI_05, BETA_PHI_099, DEFAULT, INFEASIBLE

SETS = {
    "feasible": ("feasible", SolverConfig(), DEFAULT),
    "infeasible": ("infeasible", SolverConfig(), INFEASIBLE),
    "beta_phi_05": ("feasible", SolverConfig(beta_phi=0.5), BETA_PHI_05),
    "beta_phi_099": ("feasible", SolverConfig(beta_phi=0.99), BETA_PHI_099),
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("table", nargs="?", default="feasible", choices=sorted(SETS))
    parser.add_argument("--out", help="also write the suite CSV here")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    which, cfg, ref = SETS[args.table]
    report = run_suite(which, cfg, args.jobs)
    head = f"{'problem':10s} {'status':22s} {'iter':>9s} {'f(x*)':>27s} {'v(x*)':>23s} {'final rho':>21s}"
    print(head)
    print("-" * len(head))
    for row in report.rows:
        r = ref.get(row.problem)
        it = f"{row.iters}/{r.iters}" if r else str(row.iters)
        f = f"{row.f:.6e}/{r.f:.6e}" if r else f"{row.f:.6e}"
        v = f"{row.v:.3e}/{r.v:.3e}" if r else f"{row.v:.3e}"
        rho = f"{row.final_rho:.4g}/{r.rho:.4g}" if r else f"{row.final_rho:.4g}"
        print(f"{row.problem:10s} {row.status:22s} {it:>9s} {f:>27s} {v:>23s} {rho:>21s}")
    print(report.summary())
    if args.out:
        write_csv(report, args.out)


if __name__ == "__main__":
    main()
