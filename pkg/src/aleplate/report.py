"""Text summary and SVG plots of a run, diagnose or MMS directory.

Plots are written with the Agg backend, a fixed figure size, a fixed SVG hash
salt and no date metadata, so identical CSVs give identical bytes.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .diagnostics.ledgers import LEDGER_TAGS, LEDGERS  # noqa: E402
from .runner import read_status  # noqa: E402

FIGSIZE = (6.4, 4.0)
SVG_SALT = "aleplate"

MONITOR_COLUMNS = ("J_min", "J_max", "R_min", "R_max", "qprime_min", "qprime_max",
                   "a_minus_I_H2", "kinematic_residual", "tangency_bottom", "tangency_top")
RESIDUAL_FILES = {"gresidual": ("interior", "top", "bottom"),
                  "vorticity": ("vorticity_residual", "divergence_residual"),
                  "divcurl": ("error_l2", "relative_l2")}


class ReportError(OSError):
    """A directory lacks the CSVs a report needs."""


def read_csv(path) -> list[dict[str, float | str]]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: _number(v) for k, v in row.items()})
    return rows


def _number(text: str):
    if text == "":
        return math.nan
    try:
        return float(text)
    except ValueError:
        return text


def _column(rows, key) -> list[float]:
    return [r[key] for r in rows if isinstance(r.get(key), float)]


def _finite(xs):
    return [x for x in xs if math.isfinite(x)]


def _g(x) -> str:
    return "nan" if not math.isfinite(x) else f"{x:.3e}"


def _save(fig, path) -> None:
    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _semilogy(ax, x, y, label):
    pts = [(a, b) for a, b in zip(x, y) if math.isfinite(b) and b > 0]
    if pts:
        ax.semilogy(*zip(*pts), label=label)


def directory_kind(path) -> str:
    d = Path(path)
    if (d / "study.csv").exists():
        return "mms"
    if (d / "gresidual.csv").exists():
        return "diagnose"
    return "run"


def emit_report(directory) -> str:
    """Write ``summary.txt`` and SVG plots into ``directory``; return the summary."""
    d = Path(directory)
    if not d.is_dir():
        raise ReportError(f"{d} is not a directory")
    kind = directory_kind(d)
    if kind == "mms":
        text = _mms_report(d)
    elif kind == "diagnose":
        text = _diagnose_report(d)
    else:
        text = _run_report(d)
    (d / "summary.txt").write_text(text)
    return text


def _require(d: Path, names) -> dict[str, list]:
    missing = [n for n in names if not (d / n).exists()]
    if missing:
        raise ReportError(f"{d}: missing {', '.join(missing)}")
    return {n: read_csv(d / n) for n in names}


def _ledger_files():
    return [f"ledger_{LEDGER_TAGS[w]}.csv" for w in LEDGERS]


def _monitor_lines(rows) -> list[str]:
    lines = ["monitor extremes:"]
    for key in MONITOR_COLUMNS:
        col = _finite(_column(rows, key))
        if not col:
            continue
        lines.append(f"  {key:<20s} min {_g(min(col))}  max {_g(max(col))}")
    return lines


def _ledger_lines(tables) -> tuple[list[str], float]:
    lines = ["ledger identity residuals (final / max):"]
    worst = 0.0
    for name in _ledger_files():
        col = _finite(_column(tables[name], "identity_residual"))
        if col:
            worst = max(worst, max(col))
            lines.append(f"  {name:<22s} {_g(col[-1])} / {_g(max(col))}")
        else:
            lines.append(f"  {name:<22s} no rows")
    return lines, worst


def _plot_ledgers(d: Path, tables) -> None:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for name in _ledger_files():
        rows = tables[name]
        _semilogy(ax, _column(rows, "t"), _column(rows, "identity_residual"),
                  name.removesuffix(".csv"))
    ax.set_xlabel("t")
    ax.set_ylabel("identity residual")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize="small")
    _save(fig, d / "ledger_residuals.svg")


def _run_report(d: Path) -> str:
    if not (d / "status.txt").exists():
        raise ReportError(f"{d}: missing status.txt")
    tables = _require(d, ["monitors.csv", "norms.csv", *_ledger_files()])
    status = read_status(d / "status.txt")
    lines = [f"run directory: {d.name}", f"status: {status.get('status', '?')}",
             f"steps: {status.get('steps', '?')}  t_final: {status.get('t_final', '?')}"
             f"  dt: {status.get('dt', '?')}"]
    if status.get("tripped"):
        lines.append(f"tripped monitor: {status['tripped']} at t = {status.get('trip_time', '?')}")
    elif status.get("status") == "blowup":
        lines.append(f"blowup at t = {status.get('trip_time', '?')}")
    if status.get("norm_bound_exceeded"):
        lines.append(f"norm bounds exceeded: {status['norm_bound_exceeded']}")
    lines += _monitor_lines(tables["monitors.csv"])
    ledger, worst = _ledger_lines(tables)
    lines += ledger
    lines.append(f"max ledger residual: {_g(worst)}")

    norms = tables["norms.csv"]
    ratio = _finite(_column(norms, "max_ratio"))
    if ratio:
        lines.append(f"largest norm / bound ratio: {_g(max(ratio))}")
    fig, ax = plt.subplots(figsize=FIGSIZE)
    t = _column(norms, "t")
    keys = [k for k in (norms[0] if norms else {}) if k not in ("step", "t", "max_ratio")]
    for k in keys:
        _semilogy(ax, t, _column(norms, k), k)
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    if keys:
        ax.legend(fontsize="xx-small", ncol=3)
    _save(fig, d / "norms.svg")
    _plot_ledgers(d, tables)
    return "\n".join(lines) + "\n"


def _diagnose_report(d: Path) -> str:
    names = [f"{n}.csv" for n in RESIDUAL_FILES] + ["monitors.csv", *_ledger_files()]
    tables = _require(d, names)
    lines = [f"diagnose directory: {d.name}", "residuals (final / max):"]
    for name, cols in RESIDUAL_FILES.items():
        rows = tables[f"{name}.csv"]
        for c in cols:
            col = _finite(_column(rows, c))
            if col:
                lines.append(f"  {name + '.' + c:<32s} {_g(col[-1])} / {_g(max(col))}")
            else:
                lines.append(f"  {name + '.' + c:<32s} no rows")
    lines += _monitor_lines(tables["monitors.csv"])
    ledger, worst = _ledger_lines(tables)
    lines += ledger
    lines.append(f"max ledger residual: {_g(worst)}")
    _plot_ledgers(d, tables)
    return "\n".join(lines) + "\n"


def _mms_report(d: Path) -> str:
    rows = read_csv(d / "study.csv")
    case = (d / "case.txt").read_text().strip() if (d / "case.txt").exists() else d.name
    lines = [f"MMS study: {case}",
             f"{'n1':>4s} {'n3':>4s} {'h3':>10s} {'dt':>10s} {'L2 error':>10s} "
             f"{'H1 error':>10s} {'order':>6s}"]
    for r in rows:
        order = "-" if not math.isfinite(r["order"]) else f"{r['order']:.2f}"
        lines.append(f"{int(r['n1']):4d} {int(r['n3']):4d} {r['h3']:10.3e} {r['dt']:10.3e} "
                     f"{r['err_l2']:10.3e} {r['err_h1']:10.3e} {order:>6s}")
    fig, ax = plt.subplots(figsize=FIGSIZE)
    h3 = _column(rows, "h3")
    x, label = (h3, "h3") if len(set(h3)) > 1 else (_column(rows, "dt"), "dt")
    ax.loglog(x, _column(rows, "err_l2"), "o-", label="L2")
    ax.loglog(x, _column(rows, "err_h1"), "s-", label="H1")
    ax.set_xlabel(label)
    ax.set_ylabel("error")
    ax.legend()
    _save(fig, d / "convergence.svg")
    return "\n".join(lines) + "\n"
