"""Command-line front end: ``inexact-ipm solve model.mps [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from .errors import ModelError, MpsParseError
from .ipm import IpmParams, IpmStatus, ipm_solve
from .ldl import FactorParams, dump_factorization
from .mps import read_mps, to_standard_form
from .sparse import write_matrix_market

__all__ = ["build_parser", "build_report", "main", "EXIT_CODES", "WALL_TIME_FIELDS"]

EXIT_CODES = {
    IpmStatus.OPTIMAL: 0,
    IpmStatus.MAX_ITERS: 2,
    IpmStatus.NUMERICAL_FAILURE: 3,
}
EXIT_USAGE = 1

# fields that depend on the clock and are excluded from reproducibility checks
WALL_TIME_FIELDS = ("wall_seconds", "t_factor", "t_solve")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ip, fp = IpmParams(), FactorParams()
    parser = _Parser(prog="inexact-ipm",
                     description="Inexact primal-dual interior point LP solver.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("solve", help="solve an LP given in MPS format")
    s.add_argument("mps", help="path to the MPS file")
    s.add_argument("--tol", type=float, default=ip.tol_p,
                   help="relative tolerance for primal, dual and gap (default %(default)g)")
    s.add_argument("--sigma", type=float, default=ip.sigma)
    s.add_argument("--eta-max", type=float, default=ip.eta_max)
    s.add_argument("--eta-min", type=float, default=ip.eta_min)
    s.add_argument("--kappa", type=float, default=fp.kappa,
                   help="bound on the inverse triangular factor norm (must exceed 1)")
    s.add_argument("--droptol-l", type=float, default=fp.tau_L)
    s.add_argument("--droptol-s", type=float, default=fp.tau_S)
    s.add_argument("--max-levels", type=int, default=fp.max_levels)
    s.add_argument("--dense-threshold", type=int, default=fp.final_dense_threshold)
    s.add_argument("--max-iters", type=int, default=ip.max_iters)
    s.add_argument("--delta-p", type=float, default=ip.delta_p)
    s.add_argument("--delta-d", type=float, default=ip.delta_d)
    s.add_argument("--stats-json", metavar="PATH", help="write a JSON run report")
    s.add_argument("--dump-mm", metavar="DIR",
                   help="write A, the last KKT matrix and its factors as Matrix Market")
    s.add_argument("--verbose", action="store_true")
    return parser


def _params(ns) -> IpmParams:
    fp = FactorParams(kappa=ns.kappa, tau_L=ns.droptol_l, tau_S=ns.droptol_s,
                      max_levels=ns.max_levels, final_dense_threshold=ns.dense_threshold)
    return IpmParams(tol_p=ns.tol, tol_d=ns.tol, tol_gap=ns.tol, sigma=ns.sigma,
                     eta_max=ns.eta_max, eta_min=ns.eta_min, max_iters=ns.max_iters,
                     factor_params=fp, delta_p=ns.delta_p, delta_d=ns.delta_d)


def build_report(name, lp, sol, wall_seconds) -> dict:
    """JSON-ready summary of a run."""
    its = [log.as_dict() for log in sol.logs]
    fills = [log.fill_ratio for log in sol.logs]
    return {
        "instance": name,
        "rows": lp.m,
        "cols": lp.n,
        "nnz_a": lp.A.nnz,
        "status": sol.status.value,
        "objective": sol.objective,
        "wall_seconds": wall_seconds,
        "iterations": its,
        "totals": {
            "sqmr_iters": sum(log.sqmr_iters for log in sol.logs),
            "fill_ratio_avg": sum(fills) / len(fills) if fills else 0.0,
        },
    }


def _print_summary(report, message, out):
    print(f"{'k':>3} {'mu':>10} {'rp':>10} {'rd':>10} {'gap':>10} {'eta':>8} "
          f"{'sqmr':>5} {'res':>3} {'fill':>6}", file=out)
    for it in report["iterations"]:
        print(f"{it['k']:>3} {it['mu']:>10.3e} {it['rp']:>10.3e} {it['rd']:>10.3e} "
              f"{it['gap']:>10.3e} {it['eta']:>8.1e} {it['sqmr_iters']:>5} "
              f"{it['resolves']:>3} {it['fill_ratio']:>6.2f}", file=out)
    t = report["totals"]
    print(f"instance   {report['instance']}  ({report['rows']} x {report['cols']}, "
          f"nnz {report['nnz_a']})", file=out)
    print(f"status     {report['status']}" + (f"  ({message})" if message else ""), file=out)
    print(f"objective  {report['objective']:.10g}", file=out)
    print(f"iterations {len(report['iterations'])}  sqmr total {t['sqmr_iters']}  "
          f"avg fill {t['fill_ratio_avg']:.2f}", file=out)
    print(f"wall time  {report['wall_seconds']:.2f} s", file=out)


def _solve(ns, out) -> int:
    try:
        params = _params(ns)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    model = read_mps(ns.mps)
    lp, _ = to_standard_form(model)
    name = model.name or os.path.splitext(os.path.basename(ns.mps))[0]

    last = {}

    def keep(info):
        last["info"] = info

    t0 = time.perf_counter()
    sol = ipm_solve(lp, params, callback=keep if ns.dump_mm else None)
    wall = time.perf_counter() - t0
    report = build_report(name, lp, sol, wall)
    _print_summary(report, sol.message, out)

    if ns.stats_json:
        with open(ns.stats_json, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    if ns.dump_mm:
        os.makedirs(ns.dump_mm, exist_ok=True)
        write_matrix_market(os.path.join(ns.dump_mm, "A.mtx"), lp.A)
        if "info" in last:
            info = last["info"]
            write_matrix_market(os.path.join(ns.dump_mm, "K.mtx"), info.kkt.K)
            dump_factorization(info.factorization, ns.dump_mm)
    return EXIT_CODES[sol.status]


def main(argv=None, out=None) -> int:
    """Run the CLI and return the process exit code."""
    out = out or sys.stdout
    try:
        ns = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                            format="%(message)s")
        return _solve(ns, out)
    except _UsageError as exc:
        print(f"inexact-ipm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, MpsParseError, ModelError) as exc:
        print(f"inexact-ipm: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
