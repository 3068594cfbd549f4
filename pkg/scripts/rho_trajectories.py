"""Write (k, rho_k) trajectory files for hs11, hs43 and hs61 and print them side by side.

Usage: python3 scripts/rho_trajectories.py [OUTDIR]   (default: rho_trajectories/)
"""

import sys
from itertools import zip_longest
from pathlib import Path

from dustsqp.cli import run_single
from dustsqp.reference import DEFAULT, TRAJECTORY_PROBLEMS


def main() -> None:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "rho_trajectories")
    runs = {name: run_single(name, trace_dir=out) for name in TRAJECTORY_PROBLEMS}
    print("k    " + "".join(f"{n:>12s}" for n in runs))
    columns = [[rho for _, rho in r.rho_trajectory] for r in runs.values()]
    for k, values in enumerate(zip_longest(*columns)):
        print(f"{k:<5d}" + "".join(f"{v:12.6f}" if v is not None else " " * 12 for v in values))
    print("ref  " + "".join(f"{DEFAULT[n].rho:12.6f}" for n in runs))
    print(f"trajectory files written to {out}/")


if __name__ == "__main__":
    main()
