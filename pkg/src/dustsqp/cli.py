"""Command-line runner: single solves with trace files, suite runs with CSV output.

Exit codes: 0 when every selected problem succeeds (or the selection is
empty), 1 when some problem fails, 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import ConfigError, SolverConfig, field_types
from .problems import available_problems, feasible_names, get_problem, infeasible_names
from .solver import IterRecord, SolveResult, Status, sqp_solve

logger = logging.getLogger(__name__)

CSV_HEADER = ["problem", "status", "iters", "nf", "f", "v", "kkt", "final_rho"]
_FLOAT_FMT = "{:.16e}"
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class UsageError(ValueError):
    """Unknown problem, malformed override or unreadable config file."""


def _parse_value(key: str, text: str, types: dict[str, type]):
    kind = types[key]
    text = text.strip()
    if kind is bool:
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind is int:
        return int(float(text)) if "e" in text.lower() else int(text)
    if kind is float:
        return float(text)
    if key == "beta_l" and text.lower() == "none":
        return None
    return text


def parse_assignments(lines, source: str = "<overrides>") -> dict:
    """Parse ``key=value`` lines into typed config values; ``#`` starts a comment."""
    types = field_types()
    out = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, text = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _parse_value(key, text, types)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return out


def load_config(path=None, overrides=None) -> SolverConfig:
    """Defaults, then the file at ``path`` (if any), then ``key=value`` overrides."""
    values = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        values.update(parse_assignments(text.splitlines(), str(path)))
    if overrides:
        values.update(parse_assignments(overrides, "--set"))
    return SolverConfig(**values)


def expected_status(name: str) -> Status:
    return Status.INFEASIBLE_STATIONARY if name.endswith("_inf") else Status.OPTIMAL


def write_trace(result: SolveResult, directory) -> tuple[Path, Path]:
    """Write ``<name>_trace.csv`` (one row per outer iteration) and ``<name>_rho.txt`` (k, rho_k)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    trace_path = directory / f"{result.name}_trace.csv"
    rho_path = directory / f"{result.name}_rho.txt"
    names = [f.name for f in dataclasses.fields(IterRecord)]
    with trace_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for rec in result.per_iter_trace:
            w.writerow([_fmt(getattr(rec, n)) for n in names])
    with rho_path.open("w", encoding="utf-8", newline="\n") as fh:
        for k, rho in result.rho_trajectory:
            fh.write(f"{k} {_FLOAT_FMT.format(rho)}\n")
    return trace_path, rho_path


def read_trajectory(path) -> list[tuple[int, float]]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            k, rho = line.split()
            out.append((int(k), float(rho)))
    return out


def run_single(name: str, config: SolverConfig | None = None, trace_dir=None) -> SolveResult:
    """Solve one registered problem, optionally writing its trace and rho-trajectory files."""
    try:
        problem = get_problem(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    result = sqp_solve(problem, config or SolverConfig())
    if trace_dir is not None:
        write_trace(result, trace_dir)
    return result


@dataclass(frozen=True)
class SuiteRow:
    problem: str
    status: str
    iters: int
    nf: int
    f: float
    v: float
    kkt: float
    final_rho: float

    @property
    def succeeded(self) -> bool:
        return self.status == expected_status(self.problem).value

    @classmethod
    def from_result(cls, r: SolveResult) -> "SuiteRow":
        return cls(r.name, r.status.value, r.outer_iters, r.n_f, r.f_final, r.v_final, r.kkt, r.rho_final)


@dataclass
class SuiteReport:
    rows: list[SuiteRow] = field(default_factory=list)

    @property
    def n_succeeded(self) -> int:
        return sum(r.succeeded for r in self.rows)

    @property
    def n_failed(self) -> int:
        return len(self.rows) - self.n_succeeded

    @property
    def success_rate(self) -> float:
        return self.n_succeeded / len(self.rows) if self.rows else 1.0

    def summary(self) -> str:
        return (
            f"succeeded={self.n_succeeded} failed={self.n_failed} total={len(self.rows)} "
            f"rate={100.0 * self.success_rate:.2f}%"
        )


def select(which: str) -> list[str]:
    if which == "feasible":
        return feasible_names()
    if which == "infeasible":
        return infeasible_names()
    if which == "all":
        return available_problems()
    raise UsageError(f"unknown suite {which!r}; expected feasible, infeasible or all")


def _solve_row(name: str, config: SolverConfig) -> SuiteRow:
    try:
        return SuiteRow.from_result(run_single(name, config))
    except Exception as exc:  # one bad problem must not abort the suite
        logger.error("%s failed: %r", name, exc)
        nan = float("nan")
        return SuiteRow(name, "Error", 0, 0, nan, nan, nan, nan)


def run_suite(names, config: SolverConfig | None = None, jobs: int = 1) -> SuiteReport:
    """Solve ``names`` (a list, or ``feasible``/``infeasible``/``all``) and collect one row each.

    Rows keep the order of ``names`` whatever the number of worker threads.
    """
    if isinstance(names, str):
        names = select(names)
    config = config or SolverConfig()
    if jobs <= 1:
        rows = [_solve_row(n, config) for n in names]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda n: _solve_row(n, config), names))
    return SuiteReport(rows)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return _FLOAT_FMT.format(value)
    return str(value)


def write_csv(report: SuiteReport, path) -> None:
    """Write the suite table plus a trailing ``# summary`` comment line."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([r.problem, r.status, r.iters, r.nf] + [_fmt(float(x)) for x in (r.f, r.v, r.kkt, r.final_rho)])
        fh.write(f"# {report.summary()}\n")


def read_csv(path) -> SuiteReport:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header!r}")
    rows = [
        SuiteRow(p, s, int(i), int(nf), float(f), float(v), float(k), float(rho))
        for p, s, i, nf, f, v, k, rho in reader
    ]
    return SuiteReport(rows)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dustsqp", description="Penalty SQP solver with dynamic penalty updates.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver warnings and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one registered problem")
    solve.add_argument("name")
    solve.add_argument("--config", help="key=value config file")
    solve.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one parameter")
    solve.add_argument("--trace", metavar="DIR", help="write per-iteration trace and rho trajectory here")

    suite = sub.add_parser("suite", help="solve a set of registered problems")
    suite.add_argument("which", choices=["feasible", "infeasible", "all"])
    suite.add_argument("--config", help="key=value config file")
    suite.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one parameter")
    suite.add_argument("--jobs", type=int, default=1)
    suite.add_argument("--out", metavar="FILE.csv", help="CSV output path (default: stdout)")

    sub.add_parser("list", help="print registered problem names")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "list":
        print("\n".join(available_problems()))
        return 0
    try:
        config = load_config(args.config, args.set)
        if args.command == "solve":
            result = run_single(args.name, config, args.trace)
            row = SuiteRow.from_result(result)
            print(",".join(CSV_HEADER))
            print(",".join([row.problem, row.status, str(row.iters), str(row.nf)]
                           + [_fmt(float(x)) for x in (row.f, row.v, row.kkt, row.final_rho)]))
            return 0 if row.succeeded else 1
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        report = run_suite(args.which, config, args.jobs)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.out:
        write_csv(report, args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([r.problem, r.status, r.iters, r.nf] + [_fmt(float(x)) for x in (r.f, r.v, r.kkt, r.final_rho)])
    print(report.summary(), file=sys.stderr)
    return 0 if report.n_failed == 0 else 1
