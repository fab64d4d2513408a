import numpy as np
import pytest

from aleplate.diagnostics.window import JetWindow, WindowNotReady
from aleplate.grid import Grid
from aleplate.solver import State


def states(g, times, fn):
    for t in times:
        yield State(g, t, g.zeros(3), fn(t) * np.ones(g.shape), g.bzeros(), g.bzeros())


def test_derivatives_of_a_polynomial_in_time():
    g = Grid(4, 4, 13)
    win = JetWindow(length=9)
    for s in states(g, 0.1 * np.arange(9), lambda t: 1 + t**3):
        win.push(s)
    tc = 0.4
    assert win.derivative(lambda s: s.R, 1)[0, 0, 0] == pytest.approx(3 * tc**2)
    assert win.derivative(lambda s: s.R, 2)[0, 0, 0] == pytest.approx(6 * tc)
    ser = win.series(lambda s: s.R, 3)
    assert np.allclose(ser.derivatives()[:, 0, 0, 0], [1 + tc**3, 3 * tc**2, 6 * tc, 6])


def test_window_guards():
    g = Grid(4, 4, 13)
    win = JetWindow(length=9)
    it = states(g, [0.0, 0.1, 0.25], lambda t: 1.0)
    win.push(next(it))
    with pytest.raises(WindowNotReady):
        win.center
    win.push(next(it))
    with pytest.raises(ValueError, match="equally spaced"):
        win.push(next(it))
    with pytest.raises(ValueError):
        JetWindow(length=8)
