import numpy as np
import pytest

from aleplate.diagnostics.ledgers import LEDGERS, boundary_terms, energy_ledger, product_series
from aleplate.grid import Grid
from aleplate.pressure import PressureLaw
from aleplate.taylor import Series

from conftest import analytic_window, trajectory, window_from


@pytest.fixture(scope="module")
def plate_window():
    law = PressureLaw()
    return window_from(trajectory(Grid(8, 8, 17), law, "plate", steps=12), law)


def test_product_series_is_the_cauchy_product():
    a = Series(np.array([[1.0, 2.0], [3.0, 0.0], [1.0, 1.0]]))
    b = Series(np.array([[2.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))
    out = product_series("i,i->", a, b, order=2)
    direct = (a[0] * b[0] + a[1] * b[1]).c
    assert np.allclose(out.c, direct)


@pytest.mark.parametrize("which", LEDGERS)
@pytest.mark.parametrize("m", range(4))
def test_rest_state_has_zero_ledgers(law, which, m):
    g = Grid(8, 8, 17)
    rest = lambda t: (g.zeros(3), np.ones(g.shape), g.bzeros(), g.bzeros())  # noqa: E731
    row = energy_ledger(analytic_window(g, rest, law=law), which, m)
    assert row.identity_residual <= 1e-12
    assert row.energy == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("which", LEDGERS)
def test_identity_closes_at_m0(plate_window, which):
    row = energy_ledger(plate_window, which, 0)
    assert row.identity_residual < 0.1 * abs(row.rate)
    assert set(row.as_dict()) >= {"t", "energy", "rate", "identity_residual"}


def test_two_boundary_evaluations_agree(plate_window):
    b = boundary_terms(plate_window, 0)
    assert b["I_B1_fluid"] == pytest.approx(b["I_B1_plate"], rel=1e-5)
    assert b["I_B2"] == b["I_B3"] == b["I_B4"] == 0.0


def test_weighted_plate_ledger_matches_plain_for_flat_geometry(plate_window):
    plain = energy_ledger(plate_window, "plate", 0)
    weighted = energy_ledger(plate_window, "plate_weighted", 0)
    assert weighted.energy == pytest.approx(plain.energy, rel=1e-3)


def test_rejects_bad_arguments(plate_window):
    with pytest.raises(ValueError):
        energy_ledger(plate_window, "vorticity", 0)
    with pytest.raises(ValueError):
        energy_ledger(plate_window, "momentum", 4)
