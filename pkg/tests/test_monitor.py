import numpy as np
import pytest

from aleplate.diagnostics.monitor import (jet_norm_table, monitor, norm_bounds,
                                          perturbation_scale, window_norm_table)
from aleplate.grid import Grid
from aleplate.initdata import build_jet, initial_fields
from aleplate.solver import State, steady_state

from conftest import trajectory, window_from


def test_rest_state_is_green(law):
    r = monitor(steady_state(Grid(8, 8, 17), law), law)
    assert r.green and not r.blowup
    assert (r.J_min, r.J_max) == (1.0, 1.0)
    assert r.tangency_bottom == r.tangency_top == 0.0


def test_density_monitor_trips(law):
    g = Grid(8, 8, 17)
    s = State(g, 0.0, g.zeros(3), np.full(g.shape, 0.2), g.bzeros(), g.bzeros())
    assert monitor(s, law).tripped == ["R", "qprime"]


def test_kinematic_and_geometry_monitors_trip(law):
    g = Grid(8, 8, 17)
    B1, B2 = g.bmesh()
    s = State(g, 0.0, g.zeros(3), np.ones(g.shape), 0.5 * np.cos(B1) + 0 * B2,
              0.1 + 0 * B1 * B2)
    tripped = monitor(s, law).tripped
    assert "J" in tripped and "a_minus_I" in tripped and "kinematic" in tripped


def test_blowup_flag(law):
    g = Grid(8, 8, 17)
    v = g.zeros(3)
    v[0, 0, 0, -1] = np.nan
    s = State(g, 0.0, v, np.ones(g.shape), g.bzeros(), g.bzeros())
    r = monitor(s, law)
    assert r.blowup


def test_window_and_jet_tables_agree_at_start(law):
    g = Grid(8, 8, 17)
    v0, R0, w1 = initial_fields(g, law, "small", 1e-3)
    jet = build_jet(g, v0, R0, w1, law)
    initial = jet_norm_table(jet)
    win = window_from(trajectory(g, law, steps=8, dtfac=0.01), law)
    later = window_norm_table(win)
    assert set(initial) == set(later)
    for key in ("dt0v_H3", "dt1v_H2", "dt0R_H3", "dt3v_H0", "dt0psi_H5.5"):
        assert later[key] == pytest.approx(initial[key], rel=0.05, abs=1e-9)


def test_norm_bounds_use_the_perturbation_scale(law):
    g = Grid(8, 8, 17)
    v0, R0, w1 = initial_fields(g, law, "small", 1e-3)
    jet = build_jet(g, v0, R0, w1, law)
    scale = perturbation_scale(jet)
    bounds = norm_bounds(jet_norm_table(jet), scale)
    assert bounds["dt0w_H5"] == pytest.approx(10 * scale)
    assert bounds["dt0R_H3"] == pytest.approx(10 * jet_norm_table(jet)["dt0R_H3"])
