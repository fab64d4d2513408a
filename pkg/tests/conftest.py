import numpy as np
import pytest

from aleplate.diagnostics.window import JetWindow
from aleplate.grid import Grid
from aleplate.initdata import initial_fields
from aleplate.pressure import PressureLaw
from aleplate.solver import Solver, State


@pytest.fixture
def law():
    return PressureLaw()


@pytest.fixture
def small_grid():
    return Grid(8, 8, 17)


def analytic_window(grid, fields, dt=1e-2, t0=0.0, law=None, length=9):
    """Window filled from ``fields(t) -> (v, R, w, w_t)`` at equally spaced times."""
    win = JetWindow(law or PressureLaw(), length)
    for k in range(length):
        t = t0 + k * dt
        v, R, w, w_t = fields(t)
        win.push(State(grid, t, v, R, w, w_t))
    return win


def trajectory(grid, law, family="small", amplitude=1e-3, dtfac=0.5, steps=12, every=1):
    """States of a solver run, one every ``every`` steps, starting at t = 0."""
    v0, R0, w1 = initial_fields(grid, law, family, amplitude)
    sol = Solver(grid, law)
    s = sol.initial_state(0.0, v0, R0, grid.bzeros(), w1)
    dt = dtfac * grid.h3
    out = [s]
    for k in range(1, steps + 1):
        s = sol.step(s, dt)
        if k % every == 0:
            out.append(s)
    return out


def window_from(states, law, length=9):
    win = JetWindow(law, length)
    for s in states[-length:]:
        win.push(s)
    return win


def rel(x, y):
    return np.max(np.abs(x - y)) / max(np.max(np.abs(y)), 1e-300)


# one verdict line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def verdict(label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1][1:].rstrip(":"))):
            terminalreporter.write_line(line)
