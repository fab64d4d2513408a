import numpy as np
import pytest

from aleplate.grid import Grid
from aleplate.initdata import initial_fields
from aleplate.solver import Solver, cfl_dt, steady_state


def start(g, law, family="small", amp=1e-3):
    v0, R0, w1 = initial_fields(g, law, family, amp)
    return Solver(g, law), Solver(g, law).initial_state(0.0, v0, R0, g.bzeros(), w1)


def test_steady_state_is_fixed(law):
    g = Grid(8, 8, 17)
    s = steady_state(g, law)
    out = Solver(g, law).advance(s, cfl_dt(s, law), 20)
    for f in (out.v, out.R - 1, out.w, out.w_t):
        assert np.max(np.abs(f)) <= 1e-13
    assert out.t == pytest.approx(20 * cfl_dt(s, law))


def test_advance_equals_repeated_steps(law):
    g = Grid(8, 8, 17)
    sol, s = start(g, law)
    a = sol.advance(s, 0.02, 3)
    b = sol.step(sol.step(sol.step(s, 0.02), 0.02), 0.02)
    assert np.array_equal(a.v, b.v) and np.array_equal(a.w, b.w)


def test_mirror_symmetry(law):
    g = Grid(8, 8, 17)
    sol, s = start(g, law, "plate")
    a = sol.advance(s.reflect_x1(), 0.02, 5)
    b = sol.advance(s, 0.02, 5).reflect_x1()
    assert np.allclose(a.v, b.v, atol=1e-15) and np.allclose(a.w, b.w, atol=1e-15)


def test_boundary_conditions_hold_after_steps(law):
    g = Grid(8, 8, 17)
    sol, s = start(g, law, "plate")
    for _ in range(5):
        s = sol.step(s, 0.02)
        assert np.max(np.abs(s.v[2, ..., 0])) < 1e-14
        assert s.kinematic_residual() < 1e-12


def test_mass_nearly_conserved(law):
    g = Grid(8, 8, 33)
    sol, s = start(g, law)
    m0 = s.mass()
    s = sol.advance(s, 0.5 * g.h3, 16)
    assert abs(s.mass() - m0) / m0 < 1e-9


def test_cfl_step_shrinks_with_resolution(law):
    a = cfl_dt(steady_state(Grid(8, 8, 17), law), law)
    b = cfl_dt(steady_state(Grid(8, 8, 33), law), law)
    assert 0 < b < a
    assert cfl_dt(steady_state(Grid(8, 8, 17), law), law, 0.25) == pytest.approx(a / 2)
