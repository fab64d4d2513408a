"""Command line entry point: ``aleplate <subcommand> ...``.

Exit codes: 0 success, 2 configuration or data error, 3 monitor trip,
4 blowup, 5 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import fcntl
import sys
from pathlib import Path

from .config import Config, ConfigError, format_config, parse_config
from .diagnostics.monitor import window_norm_table
from .diagnostics.window import JetWindow
from .grid import Grid
from .initdata import IncompatibleDataError, build_jet, compatibility_defects, total_energy_E0
from .mms import CATALOG, StudyAborted, build_case, convergence_study, default_study
from .pressure import DensityRangeError
from .report import ReportError, emit_report
from .runner import (EXIT_BLOWUP, EXIT_CONFIG, EXIT_IO, EXIT_OK, CsvLog, diagnose,
                     initial_data, load_trajectory, run)
from .snapshot import write_snapshot
from .solver import Solver

LOCK_NAME = ".aleplate.lock"


class BusyError(OSError):
    """Another process is writing the same output directory."""


@contextlib.contextmanager
def exclusive_dir(path):
    """Create ``path`` and hold an advisory lock on it for the duration."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / LOCK_NAME
    with open(lock, "w") as fh:
        try:
            fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            raise BusyError(f"{out} is being written by another process") from None
        try:
            yield out
        finally:
            lock.unlink(missing_ok=True)


def _load_config(path) -> Config:
    return parse_config(path) if path else Config()


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    with exclusive_dir(args.out) as out:
        result = run(cfg, out)
    print(result.as_text(), end="")
    return result.exit_code


def cmd_diagnose(args) -> int:
    with exclusive_dir(args.out) as out:
        counts = diagnose(args.traj, out, args.window)
    for name, n in counts.items():
        print(f"{name}.csv: {n} rows")
    return EXIT_OK


def cmd_mms(args) -> int:
    case = build_case(args.case)
    resolutions, dt_rule = default_study(args.case, args.levels)
    with exclusive_dir(args.out) as out:
        (out / "case.txt").write_text(f"{case.name}: {case.description}\n")
        try:
            rows = convergence_study(case, resolutions, dt_rule, csv_path=out / "study.csv")
        except StudyAborted as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BLOWUP
        print(emit_report(out), end="")
    return EXIT_OK if rows else EXIT_BLOWUP


def cmd_initdata(args) -> int:
    """Build and check the initial jet, then store the t = 0 state."""
    cfg = _load_config(args.config)
    grid = Grid(cfg.n1, cfg.n2, cfg.n3)
    law = cfg.law
    v0, R0, w0, w1 = initial_data(cfg, grid, law)
    jet = build_jet(grid, v0, R0, w1, law, w0=w0)
    bottom, top = compatibility_defects(grid, v0, w0, w1)
    with exclusive_dir(args.out) as out:
        state = Solver(grid, law).initial_state(0.0, v0, R0, w0, w1)
        write_snapshot(out / "initial.apev", state)
        (out / "config.txt").write_text(format_config(cfg))
        text = (f"E0 = {total_energy_E0(jet):.17g}\n"
                f"compatibility_bottom = {bottom:.17g}\n"
                f"compatibility_plate = {top:.17g}\n")
        (out / "initdata.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_norms(args) -> int:
    """Norm table of a stored trajectory, one row per full window."""
    states, law, _ = load_trajectory(args.traj)
    log = CsvLog(args.out)
    window = JetWindow(law, args.window)
    try:
        for s in states:
            try:
                window.push(s)
            except ValueError:
                window = JetWindow(law, args.window)
                window.push(s)
            if window.full:
                log.write({"t": window.center.t, **window_norm_table(window)})
    finally:
        log.close()
    return EXIT_OK


def cmd_report(args) -> int:
    print(emit_report(args.dir), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aleplate",
                                description="Compressible Euler flow under an elastic plate.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate a configured problem")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("diagnose", help="residuals and ledgers along a stored trajectory")
    d.add_argument("--traj", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--window", type=int, default=9)
    d.set_defaults(func=cmd_diagnose)

    m = sub.add_parser("mms", help="manufactured-solution convergence study")
    m.add_argument("--case", required=True, choices=sorted(CATALOG))
    m.add_argument("--levels", type=int, default=3)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_mms)

    i = sub.add_parser("initdata", help="build and check the initial jet")
    i.add_argument("--config")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_initdata)

    n = sub.add_parser("norms", help="norm table of a stored trajectory")
    n.add_argument("--traj", required=True)
    n.add_argument("--out", required=True, help="CSV file to write")
    n.add_argument("--window", type=int, default=9)
    n.set_defaults(func=cmd_norms)

    rep = sub.add_parser("report", help="summary text and SVG plots of an output directory")
    rep.add_argument("dir")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DensityRangeError, IncompatibleDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ReportError, BusyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
