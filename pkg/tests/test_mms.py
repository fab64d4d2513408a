import numpy as np
import pytest

from aleplate.grid import Grid
from aleplate.mms import (CATALOG, Forcing, Hyp, Poly, Trig, build_case, convergence_study,
                          cos, default_study, field, harmonic_extension, run_case, sin,
                          write_study_csv)
from aleplate.pressure import PressureLaw


@pytest.mark.parametrize("factor", [Trig(2.0, 0.3), Hyp(1.5, True), Hyp(1.5, False),
                                    Poly((1.0, -2.0, 0.5, 3.0))])
def test_factor_derivatives_match_differences(factor):
    x, h = np.linspace(0.1, 0.9, 9), 1e-5
    scale, d = factor.deriv()
    fd = (factor(x + h) - factor(x - h)) / (2 * h)
    assert np.allclose(scale * d(x), fd, rtol=1e-7, atol=1e-9)


def test_field_derivatives_and_arithmetic():
    f = field(2.0, f1=sin(), f3=Poly((0.0, 0.0, 1.0)), ft=cos()) + 0.5 * field(1.0, f2=cos(3))
    x1, x2, x3, t = 0.3, 0.7, 0.4, 0.2
    assert f(x1, x2, x3, t) == pytest.approx(2 * np.sin(x1) * x3**2 * np.cos(t) + 0.5 * np.cos(3 * x2))
    assert f.d(2)(x1, x2, x3, t) == pytest.approx(4 * np.sin(x1) * x3 * np.cos(t))
    assert f.d(1)(x1, x2, x3, t) == pytest.approx(-1.5 * np.sin(3 * x2))
    assert f.d(3).d(3)(x1, x2, x3, t) == pytest.approx(-f(x1, x2, x3, t) + 0.5 * np.cos(3 * x2))


def test_continuous_harmonic_extension():
    w = field(1.0, f1=cos(), f2=sin(2)) + field(0.3)
    e = harmonic_extension(w)
    lap = e.d(0).d(0) + e.d(1).d(1) + e.d(2).d(2)
    pts = (0.4, 1.1, 0.6, 0.0)
    assert lap(*pts) == pytest.approx(0.0, abs=1e-12)
    assert e(0.4, 1.1, 1.0, 0.0) == pytest.approx(w(0.4, 1.1, 0.0, 0.0))
    assert e(0.4, 1.1, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        harmonic_extension(field(1.0, f3=Poly((0.0, 1.0))))


@pytest.mark.parametrize("name", ["a", "c"])
def test_exact_states_satisfy_wall_conditions(name):
    g = Grid(8, 8, 17)
    forcing = Forcing(build_case(name), g, PressureLaw())
    s = forcing.exact(0.3)
    assert np.max(np.abs(s.v[2, ..., 0])) < 1e-15
    # the kinematic forcing is exactly the defect of the plate condition
    top = np.einsum("i...,i...->...", s.maps.nu, s.v[..., -1]) - s.w_t
    assert np.allclose(top, forcing.kinematic(0.3), atol=1e-12)


def test_plate_case_freezes_the_fluid():
    case = build_case("b")
    assert not case.evolve_fluid and set(CATALOG) == {"a", "b", "c"}


def test_forcing_vanishes_for_the_rest_state():
    case = build_case("a")
    rest = type(case)("rest", (field(0.0),) * 3, field(1.0), field(0.0))
    forcing = Forcing(rest, Grid(8, 8, 17), PressureLaw())
    fv, fR = forcing.fluid(0.2)
    assert np.max(np.abs(fv)) == 0.0 and np.max(np.abs(fR)) == 0.0
    assert np.max(np.abs(forcing.plate(0.2))) == 0.0


def test_forced_run_tracks_the_exact_solution():
    g = Grid(8, 8, 17)
    l2, h1 = run_case(build_case("a"), g, 0.03, T=0.3)
    assert l2 < 1e-3 and h1 < 1e-1


def test_study_needs_three_levels_and_writes_csv(tmp_path):
    case = build_case("b")
    with pytest.raises(ValueError):
        convergence_study(case, [(8, 17)] * 2, lambda g, k: 0.1)
    rows = convergence_study(case, [(8, 17)] * 3, lambda g, k: 0.2 / 2**k, T=0.4,
                             csv_path=tmp_path / "s.csv")
    assert rows[0].order is None and rows[2].order > 3
    text = (tmp_path / "s.csv").read_text().splitlines()
    assert text[0] == "n1,n3,h3,dt,err_l2,err_h1,order" and len(text) == 4
    write_study_csv(rows, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == (tmp_path / "s.csv").read_text()


def test_default_studies_refine_the_right_variable():
    res, rule = default_study("b", 3)
    assert res == [(16, 17)] * 3 and rule(Grid(16, 16, 17), 2) == pytest.approx(0.025)
    res, rule = default_study("a", 3)
    assert [n3 for _, n3 in res] == [17, 33, 65]


def test_unknown_case():
    with pytest.raises(ValueError):
        build_case("z")
