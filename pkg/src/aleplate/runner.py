"""Run orchestration: integrate a configured problem and write its outputs.

A run directory holds ``config.txt``, ``status.txt``, ``monitors.csv``,
``norms.csv``, ``ledger_*.csv`` and ``snapshots/snap_NNNNNN.apev``.  Nothing
written depends on wall-clock time, so identical configs give identical
bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import Config, format_config, parse_config
from .diagnostics.divcurl import ReconstructionContractError, divcurl_reconstruct
from .diagnostics.identities import (divergence_identity_residual, g_equation_residual, l2,
                                     vorticity_and_residual)
from .diagnostics.ledgers import LEDGER_TAGS, LEDGERS, energy_ledger
from .diagnostics.monitor import (BLOWUP_NORM, jet_norm_table, monitor, norm_bounds,
                                  perturbation_scale, window_norm_table)
from .diagnostics.window import JetWindow
from .geometry import GeometryBreakdown
from .grid import Grid
from .initdata import build_jet, initial_fields
from .pressure import PressureLaw
from .snapshot import read_snapshot, write_snapshot
from .solver import Solver, cfl_dt

EXIT_OK, EXIT_CONFIG, EXIT_MONITOR, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4, 5


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


class CsvLog:
    """CSV file whose header is fixed by the first row written."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = None
        self._keys = None

    def write(self, row: dict) -> None:
        if self._fh is None:
            self._fh = open(self.path, "w", newline="")
            self._out = csv.writer(self._fh, lineterminator="\n")
            self._keys = list(row)
            self._out.writerow(self._keys)
        self._out.writerow([fmt(row[k]) for k in self._keys])

    def close(self) -> None:
        if self._fh is None:
            self.path.touch()
        else:
            self._fh.close()


@dataclass
class RunResult:
    status: str
    exit_code: int
    steps: int
    t_final: float
    dt: float
    tripped: list[str] = field(default_factory=list)
    trip_time: float | None = None
    norm_bound_exceeded: list[str] = field(default_factory=list)

    def as_text(self) -> str:
        lines = [f"status = {self.status}", f"exit_code = {self.exit_code}",
                 f"steps = {self.steps}", f"t_final = {fmt(self.t_final)}",
                 f"dt = {fmt(self.dt)}", f"tripped = {';'.join(self.tripped)}",
                 f"trip_time = {'' if self.trip_time is None else fmt(self.trip_time)}",
                 f"norm_bound_exceeded = {';'.join(self.norm_bound_exceeded)}"]
        return "\n".join(lines) + "\n"


def read_status(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def initial_data(cfg: Config, grid: Grid, law: PressureLaw):
    """(v0, R0, w0, w1) from the configured snapshot or analytic family."""
    if cfg.init_file:
        s = read_snapshot(cfg.init_file, grid)
        return s.v, s.R, s.w, s.w_t
    v0, R0, w1 = initial_fields(grid, law, cfg.family, cfg.amplitude, cfg.seed)
    return v0, R0, grid.bzeros(), w1


def run(cfg: Config, out_dir) -> RunResult:
    """Integrate to ``cfg.T`` or until a monitor trips.

    Data errors (density range, incompatible velocity) raise before the first
    step; the caller maps them to the configuration exit code.
    """
    grid = Grid(cfg.n1, cfg.n2, cfg.n3)
    law = cfg.law
    v0, R0, w0, w1 = initial_data(cfg, grid, law)
    jet = build_jet(grid, v0, R0, w1, law, w0=w0)
    out = Path(out_dir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(format_config(cfg))
    initial_norms = jet_norm_table(jet)
    bounds = norm_bounds(initial_norms, perturbation_scale(jet))

    solver = Solver(grid, law)
    state = solver.initial_state(0.0, v0, R0, w0, w1)
    dt = cfg.dt or cfl_dt(state, law, cfg.safety)
    nsteps = max(1, math.ceil(cfg.T / dt - 1e-9))
    dt = cfg.T / nsteps

    monitors = CsvLog(out / "monitors.csv")
    norms = CsvLog(out / "norms.csv")
    ledgers = {w: CsvLog(out / f"ledger_{LEDGER_TAGS[w]}.csv") for w in LEDGERS}
    window = JetWindow(law, cfg.window)
    half = cfg.window // 2
    result = RunResult("completed", EXIT_OK, 0, 0.0, dt)
    exceeded: set[str] = set()

    def snapshot(step, s):
        write_snapshot(out / "snapshots" / f"snap_{step:06d}.apev", s)

    def log_norms(step, t, table):
        ratios = {k: v / bounds[k] if bounds[k] else 0.0 for k, v in table.items()}
        exceeded.update(k for k, r in ratios.items() if r > 1.0)
        norms.write({"step": step, "t": t, **table, "max_ratio": max(ratios.values())})
        return table

    try:
        snapshot(0, state)
        log_norms(0, 0.0, initial_norms)
        report = monitor(state, law, a_tol=cfg.a_tol, kinematic_tol=cfg.kinematic_tol)
        monitors.write(_monitor_row(0, report))
        window.push(state)
        for step in range(1, nsteps + 1):
            try:
                with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
                    state = solver.step(state, dt)
            except GeometryBreakdown:
                result.status, result.exit_code = "monitor", EXIT_MONITOR
                result.tripped, result.trip_time = ["J"], state.t + dt
                break
            except ValueError:
                # non-finite values reached the plate or the geometry mid-step
                result.status, result.exit_code = "blowup", EXIT_BLOWUP
                result.trip_time = state.t + dt
                break
            result.steps, result.t_final = step, state.t
            if not (np.all(np.isfinite(state.v)) and np.all(np.isfinite(state.R))
                    and np.all(np.isfinite(state.w))):
                result.status, result.exit_code = "blowup", EXIT_BLOWUP
                result.trip_time = state.t
                break
            window.push(state)
            if cfg.snapshot_every and step % cfg.snapshot_every == 0:
                snapshot(step, state)
            if (cfg.monitor_every and step % cfg.monitor_every == 0) or step == nsteps:
                report = monitor(state, law, a_tol=cfg.a_tol, kinematic_tol=cfg.kinematic_tol)
                monitors.write(_monitor_row(step, report))
                if report.blowup:
                    result.status, result.exit_code = "blowup", EXIT_BLOWUP
                    result.trip_time = state.t
                    break
                if not report.green:
                    result.status, result.exit_code = "monitor", EXIT_MONITOR
                    result.tripped, result.trip_time = report.tripped, state.t
                    break
            if not window.full:
                continue
            centre = step - half
            if cfg.norms_every and centre % cfg.norms_every == 0:
                table = log_norms(centre, window.center.t, window_norm_table(window))
                if any(not np.isfinite(v) or v > BLOWUP_NORM for v in table.values()):
                    result.status, result.exit_code = "blowup", EXIT_BLOWUP
                    result.trip_time = window.center.t
                    break
            if cfg.ledgers and cfg.ledger_every and centre % cfg.ledger_every == 0:
                for which in LEDGERS:
                    row = energy_ledger(window, which, cfg.ledger_m)
                    ledgers[which].write({"step": centre, **row.as_dict()})
        if result.steps and not (cfg.snapshot_every and result.steps % cfg.snapshot_every == 0):
            snapshot(result.steps, state)
    finally:
        for log in (monitors, norms, *ledgers.values()):
            log.close()
    result.norm_bound_exceeded = sorted(exceeded)
    (out / "status.txt").write_text(result.as_text())
    return result


def _monitor_row(step, report) -> dict:
    return {"step": step, "t": report.t, **report.values(), "green": int(report.green),
            "tripped": ";".join(report.tripped)}


# -- post-processing of a trajectory ------------------------------------------------


def load_trajectory(traj_dir) -> tuple[list, PressureLaw, int]:
    """Snapshots sorted by time, the law from ``config.txt`` and the ledger order."""
    traj = Path(traj_dir)
    files = sorted((traj / "snapshots").glob("snap_*.apev")) or sorted(traj.glob("*.apev"))
    if not files:
        raise FileNotFoundError(f"no snapshots under {traj}")
    law, m = PressureLaw(), 0
    cfg_file = traj / "config.txt"
    if cfg_file.exists():
        cfg = parse_config(cfg_file)
        law, m = cfg.law, cfg.ledger_m
    grid = None
    states = []
    for f in files:
        s = read_snapshot(f, grid)
        grid = s.grid
        states.append(s)
    states.sort(key=lambda s: s.t)
    return states, law, m


def diagnose(traj_dir, out_dir, window_length: int = 9) -> dict[str, int]:
    """Residual and ledger CSVs along a stored trajectory.

    Windows slide over runs of equally spaced snapshots; states that do not
    fit a uniform run only get the single-state diagnostics.
    """
    states, law, m = load_trajectory(traj_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    logs = {name: CsvLog(out / f"{name}.csv")
            for name in ("gresidual", "vorticity", "divcurl", "monitors")}
    ledgers = {w: CsvLog(out / f"ledger_{LEDGER_TAGS[w]}.csv") for w in LEDGERS}
    counts = dict.fromkeys(list(logs) + [f"ledger_{LEDGER_TAGS[w]}" for w in LEDGERS], 0)
    window = JetWindow(law, window_length)
    try:
        for s in states:
            report = monitor(s, law)
            logs["monitors"].write(_monitor_row(0, report) | {"step": counts["monitors"]})
            counts["monitors"] += 1
            try:
                dc = divcurl_reconstruct(s)
                logs["divcurl"].write({"t": s.t, "error_l2": dc.error_l2, "error_h1": dc.error_h1,
                                       "relative_l2": dc.relative_l2,
                                       "a_minus_I_H2": dc.a_minus_I_h2, "valid": 1})
            except ReconstructionContractError:
                logs["divcurl"].write({"t": s.t, "error_l2": math.nan, "error_h1": math.nan,
                                       "relative_l2": math.nan,
                                       "a_minus_I_H2": report.a_minus_I_H2, "valid": 0})
            counts["divcurl"] += 1
            try:
                window.push(s)
            except ValueError:
                window = JetWindow(law, window_length)
                window.push(s)
            if not window.full:
                continue
            g = window.grid
            centre = window.center
            gi, gt, gb = g_equation_residual(window).norms(g)
            logs["gresidual"].write({"t": centre.t, "interior": gi, "top": gt, "bottom": gb})
            zeta, vres = vorticity_and_residual(window)
            logs["vorticity"].write({"t": centre.t, "vorticity": l2(g, zeta),
                                     "vorticity_residual": l2(g, vres),
                                     "divergence_residual":
                                         l2(g, divergence_identity_residual(window))})
            counts["gresidual"] += 1
            counts["vorticity"] += 1
            for which in LEDGERS:
                row = energy_ledger(window, which, m)
                ledgers[which].write(row.as_dict())
                counts[f"ledger_{LEDGER_TAGS[which]}"] += 1
    finally:
        for log in (*logs.values(), *ledgers.values()):
            log.close()
    return counts
