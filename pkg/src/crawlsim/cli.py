"""Command-line interface.

Subcommands::

    crawlsim simulate --config run.toml    smoothed solver (or chain) -> CSV
    crawlsim oracle   --config run.toml    event-driven solver -> CSV + events
    crawlsim converge --config run.toml    refinement ladder + certificate
    crawlsim verify   --config run.toml    refine, then inequality suite
    crawlsim verify   --config run.toml --input run.run.csv
                                           inequality suite on an existing CSV
    crawlsim compare  --config run.toml    both solvers, drift cross-check

Common flags: ``--out DIR`` (default: ``$CRAWLSIM_OUT`` or the current
directory), ``--plots`` to render SVG figures next to the CSV output,
``--seed`` to override the verification seed, ``--quiet`` to suppress
progress lines (failures still go to stderr).

Exit codes: 0 success; 1 a verification or comparison failed; 2 bad
configuration or usage; 3 the solver itself failed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from .chain import chain_integrate
from .config import ConfigError, RunSetup, load_config
from .csvio import (
    chain_table,
    events_table,
    penalized_table,
    read_run_csv,
    write_events_csv,
    write_run_csv,
)
from .model import GaitProgram, net_displacement_per_period
from .penalized import RefineResult, SolverError, integrate, refine
from .stickslip import OracleError, simulate_events
from .vi import CandidateTrajectory, candidate_from_penalized, verify_trajectory

__all__ = ["main", "build_parser"]


def _resolve_out(arg: str | None) -> Path:
    out = Path(arg or os.environ.get("CRAWLSIM_OUT") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _drift(grid, x1, gait: GaitProgram, min_periods: int = 2) -> float | None:
    """Per-period drift when the run covers enough periods, else None."""
    if gait.period is None:
        return None
    try:
        return net_displacement_per_period(grid, x1, gait.period, min_periods)
    except ValueError:
        return None


def _print_refine(res: RefineResult, emit) -> None:
    cert = res.certificate
    emit("refinement schedule: " + " -> ".join(f"({n.n1},{n.n2})" for n in cert.schedule))
    for pair in cert.pairs:
        emit(
            f"  ({pair.n.n1},{pair.n.n2}) vs ({pair.r.n1},{pair.r.n2}): "
            f"measured sup {pair.measured_sup:.6e}  <=  "
            f"certified {np.sqrt(pair.bound):.6e}"
        )
    emit(
        f"limit located within {cert.epsilon_limit:.6e} "
        f"(requested {cert.epsilon:.6e}); converged: {cert.converged}"
    )


def _write_refine_csv(path: Path, res: RefineResult) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n1", "n2", "r1", "r2", "measured_sup", "bound"])
        for pair in res.certificate.pairs:
            writer.writerow(
                [
                    pair.n.n1,
                    pair.n.n2,
                    pair.r.n1,
                    pair.r.n2,
                    "%.17g" % pair.measured_sup,
                    "%.17g" % pair.bound,
                ]
            )
    return path


def _write_checks_csv(path: Path, report) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["body", "test", "window_lo", "window_hi", "residual", "tolerance", "passed"])
        for row in report.rows:
            writer.writerow(
                [
                    row.body,
                    row.test,
                    "%.17g" % row.window[0],
                    "%.17g" % row.window[1],
                    "%.17g" % row.residual,
                    "%.17g" % row.tolerance,
                    int(row.passed),
                ]
            )
    return path


# ---------------------------------------------------------------------------
# Command handlers: take (setup, stem, out, args, emit), return exit code
# ---------------------------------------------------------------------------


def _cmd_simulate(setup: RunSetup, stem: str, out: Path, args, emit) -> int:
    if setup.chain is not None and setup.params is not None:
        raise ConfigError(
            "config has both [params] and [chain]; simulate needs exactly one"
        )
    if setup.chain is not None:
        ch = setup.chain
        tr = chain_integrate(
            ch.spec, ch.links, ch.y0, ch.ns, setup.horizon, setup.solver
        )
        table = chain_table(ch.spec, ch.links, tr, ch.x10)
        emit(f"chain run: p={ch.spec.p}, balance residual {tr.eq_residual:.3e}")
    else:
        params, gait = setup.require_two_body()
        run = integrate(params, gait, setup.ic, setup.ns, setup.horizon, setup.solver)
        table = penalized_table(params, gait, setup.ic, run)
        emit(
            f"smoothed run: n=({run.n.n1},{run.n.n2}), "
            f"balance residual {run.eq_residual:.3e}"
        )
        drift = _drift(run.grid, table.column("x1"), gait)
        if drift is not None:
            emit(f"drift per period: {drift:+.6e}")
    csv_path = write_run_csv(out / f"{stem}.run.csv", table)
    emit(f"wrote {csv_path}")
    if args.plots:
        from . import plots

        fig = plots.plot_trajectory(table, out / f"{stem}.run.svg", title=stem)
        emit(f"wrote {fig}")
    return 0


def _cmd_oracle(setup: RunSetup, stem: str, out: Path, args, emit) -> int:
    params, gait = setup.require_two_body()
    tr = simulate_events(params, gait, setup.ic, setup.horizon, setup.oracle)
    table = events_table(tr)
    emit(f"event-driven run: {len(tr.phases)} phases, {len(tr.events)} events")
    drift = _drift(tr.grid, tr.x1, gait)
    if drift is not None:
        emit(f"drift per period: {drift:+.6e}")
    csv_path = write_run_csv(out / f"{stem}.oracle.csv", table)
    ev_path = write_events_csv(out / f"{stem}.oracle.events.csv", tr.events)
    emit(f"wrote {csv_path}")
    emit(f"wrote {ev_path}")
    if args.plots:
        from . import plots

        fig = plots.plot_trajectory(table, out / f"{stem}.oracle.svg", title=f"{stem} (events)")
        emit(f"wrote {fig}")
    return 0


def _run_refine(setup: RunSetup):
    params, gait = setup.require_two_body()
    return refine(
        params,
        gait,
        setup.ic,
        setup.horizon,
        cfg=setup.solver,
        n0=setup.refine.n0,
        epsilon=setup.refine.epsilon,
        k_max=setup.refine.k_max,
    )


def _cmd_converge(setup: RunSetup, stem: str, out: Path, args, emit) -> int:
    res = _run_refine(setup)
    _print_refine(res, emit)
    params, gait = setup.require_two_body()
    limit = res.limit
    table = penalized_table(params, gait, setup.ic, limit)
    csv_path = write_run_csv(out / f"{stem}.limit.csv", table)
    ladder = _write_refine_csv(out / f"{stem}.refine.csv", res)
    emit(f"wrote {csv_path}")
    emit(f"wrote {ladder}")
    if args.plots:
        from . import plots

        fig = plots.plot_convergence(res.certificate, out / f"{stem}.convergence.svg")
        emit(f"wrote {fig}")
    if not res.certificate.converged:
        print(
            f"refinement did not reach epsilon={res.certificate.epsilon:g} "
            f"within {len(res.runs)} runs",
            file=sys.stderr,
        )
        return 1
    return 0


def _candidate_from_csv(path: str) -> CandidateTrajectory:
    table = read_run_csv(path)
    for col in ("t", "y", "k1", "k2"):
        if col not in table.columns:
            raise ConfigError(f"{path}: trajectory CSV lacks required column {col!r}")
    k2 = table.column("k2")
    return CandidateTrajectory(
        source=f"csv[{Path(path).name}]",
        grid=table.column("t"),
        y=table.column("y"),
        k1=table.column("k1"),
        k2=k2,
        c2=float(k2[0]),
    )


def _cmd_verify(setup: RunSetup, stem: str, out: Path, args, emit) -> int:
    params, gait = setup.require_two_body()
    vs = setup.verify
    if args.seed is not None:
        vs = dataclasses.replace(vs, seed=args.seed)
    if args.input is not None:
        try:
            cand = _candidate_from_csv(args.input)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.input}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        epsilon_limit = vs.epsilon_limit
        limit_run = None
        emit(f"verifying {args.input} (certified distance {epsilon_limit:g})")
    else:
        res = _run_refine(setup)
        _print_refine(res, emit)
        cand = candidate_from_penalized(res.limit)
        epsilon_limit = res.certificate.epsilon_limit
        limit_run = res.limit
    report = verify_trajectory(
        params,
        gait,
        cand,
        epsilon_limit=epsilon_limit,
        seed=vs.seed,
        n_random_tests=vs.n_random_tests,
        n_random_windows=vs.n_random_windows,
        tol_constant=vs.tol_constant,
        linear_tolerance=vs.linear_tolerance,
    )
    checks = _write_checks_csv(out / f"{stem}.checks.csv", report)
    emit(f"wrote {checks}")
    if args.plots and limit_run is not None:
        from . import plots

        table = penalized_table(params, gait, setup.ic, limit_run)
        fig = plots.plot_trajectory(table, out / f"{stem}.verify.svg", title=f"{stem} (limit)")
        emit(f"wrote {fig}")
    emit(
        f"inequality checks: {len(report.rows)} windows, "
        f"max residual {report.max_residual:.6e}, tolerance {report.tolerance:.6e}; "
        f"balance residual {report.linear_residual:.3e}"
    )
    if not report.ok:
        failures = report.failures()
        n_failed = len(failures) + (1 if report.linear_residual > report.linear_tolerance else 0)
        print(f"verification FAILED ({n_failed} checks):", file=sys.stderr)
        if report.linear_residual > report.linear_tolerance:
            print(
                f"  linear-relation: residual {report.linear_residual:.6e} > "
                f"{report.linear_tolerance:.6e}",
                file=sys.stderr,
            )
        for row in failures[:10]:
            print(
                f"  body {row.body}, test {row.test}, window "
                f"[{row.window[0]:.4g}, {row.window[1]:.4g}]: "
                f"residual {row.residual:.6e} > {row.tolerance:.6e}",
                file=sys.stderr,
            )
        if len(failures) > 10:
            print(f"  ... and {len(failures) - 10} more", file=sys.stderr)
        return 1
    emit("verification passed")
    return 0


def _cmd_compare(setup: RunSetup, stem: str, out: Path, args, emit) -> int:
    params, gait = setup.require_two_body()
    run = integrate(params, gait, setup.ic, setup.ns, setup.horizon, setup.solver)
    oracle = simulate_events(params, gait, setup.ic, setup.horizon, setup.oracle)
    pen_table = penalized_table(params, gait, setup.ic, run)
    or_table = events_table(oracle)
    p_csv = write_run_csv(out / f"{stem}.penalized.csv", pen_table)
    o_csv = write_run_csv(out / f"{stem}.oracle.csv", or_table)
    ev_csv = write_events_csv(out / f"{stem}.oracle.events.csv", oracle.events)
    for path in (p_csv, o_csv, ev_csv):
        emit(f"wrote {path}")

    if run.grid.size != oracle.grid.size or not np.allclose(run.grid, oracle.grid):
        raise SolverError("solvers produced different output grids; use one output_grid")
    sup_gap = float(np.max(np.abs(run.y - oracle.y)))
    emit(f"sup |y_smoothed - y_events| = {sup_gap:.6e}")

    d_pen = _drift(run.grid, pen_table.column("x1"), gait, setup.compare.min_periods)
    d_or = _drift(oracle.grid, oracle.x1, gait, setup.compare.min_periods)
    if d_pen is None or d_or is None:
        # not enough periods (or aperiodic gait): compare total displacement
        d_pen = float(pen_table.column("x1")[-1] - pen_table.column("x1")[0])
        d_or = float(oracle.x1[-1] - oracle.x1[0])
        what = "net displacement"
    else:
        what = "drift per period"
    emit(f"{what}: smoothed {d_pen:+.6e}, event-driven {d_or:+.6e}")

    floor = 1e-9 * max(1.0, setup.horizon)
    scale = max(abs(d_pen), abs(d_or))
    if args.plots:
        from . import plots

        fig = plots.plot_comparison(
            run.grid,
            run.y,
            oracle.y,
            ("smoothed", "event-driven"),
            out / f"{stem}.compare.svg",
            title=stem,
        )
        emit(f"wrote {fig}")
    if scale > floor:
        rel = abs(d_pen - d_or) / scale
        emit(f"relative {what} gap: {rel:.3e} (tolerance {setup.compare.tolerance:g})")
        if rel > setup.compare.tolerance:
            print(
                f"solver disagreement: {what} differs by {rel:.3e} "
                f"(> {setup.compare.tolerance:g})",
                file=sys.stderr,
            )
            return 1
    else:
        emit(f"{what} negligible for both solvers (|.| <= {floor:.1e})")
    emit("solvers agree")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "oracle": _cmd_oracle,
    "converge": _cmd_converge,
    "verify": _cmd_verify,
    "compare": _cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="FILE", help="TOML run configuration")
    common.add_argument(
        "--out",
        metavar="DIR",
        default=None,
        help="output directory (default: $CRAWLSIM_OUT or current directory)",
    )
    common.add_argument("--plots", action="store_true", help="also render SVG figures")
    common.add_argument("--seed", type=int, default=None, help="override verification seed")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(
        prog="crawlsim",
        description="Friction-driven crawler simulation and verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("simulate", parents=[common], help="run the smoothed (or chain) solver")
    sub.add_parser("oracle", parents=[common], help="run the event-driven solver")
    sub.add_parser("converge", parents=[common], help="refine until certified accuracy")
    verify = sub.add_parser(
        "verify", parents=[common], help="check the inequality system on a trajectory"
    )
    verify.add_argument(
        "--input",
        metavar="CSV",
        default=None,
        help="trajectory CSV to verify (default: refine from the config and "
        "verify the certified limit)",
    )
    sub.add_parser("compare", parents=[common], help="cross-check the two solvers")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    emit = (lambda *a, **k: None) if args.quiet else print
    try:
        setup = load_config(args.config)
        out = _resolve_out(args.out)
        stem = Path(args.config).stem
        return _COMMANDS[args.command](setup, stem, out, args, emit)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, OracleError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
