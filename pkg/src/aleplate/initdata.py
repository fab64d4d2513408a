"""Compatible initial data and their time-derivative jet.

The jet is produced by Taylor-mode recursion: the fluid right-hand side of
:func:`aleplate.solver.fluid_tendency` is evaluated on truncated time series,
so each new coefficient is the exact time derivative of the semi-discrete
equations at t = 0.  Plate coefficients come from
w_tt = -Lap^2 w + Lap w_t + q(R)|top.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import AleMaps, height_series, maps_from_plate
from .grid import Grid
from .pressure import DensityRangeError, PressureLaw
from .solver import fluid_tendency
from .taylor import Series, linear

FLUID_DEPTH = 3
PLATE_DEPTH = 4
COMPAT_TOL = 1e-10


class IncompatibleDataError(ValueError):
    """Initial velocity violates a boundary condition at t = 0."""


@dataclass(frozen=True, eq=False)
class InitialJet:
    """``v_jet[j]``, ``R_jet[j]`` (j <= 3) and ``w_jet[j]`` (j <= 4) are the
    j-th time derivatives at t = 0."""

    grid: Grid
    law: PressureLaw
    v_jet: np.ndarray
    R_jet: np.ndarray
    w_jet: np.ndarray
    maps0: AleMaps

    @property
    def psi0(self) -> np.ndarray:
        return self.maps0.psi

    @property
    def psi_t0(self) -> np.ndarray:
        return self.maps0.psi_t


def check_initial_density(R0, law: PressureLaw):
    """m0 <= R0 <= M0 at every node."""
    R0 = np.asarray(R0)
    bad = ~((R0 >= law.m0) & (R0 <= law.M0))
    if bad.any():
        idx = np.unravel_index(np.argmax(bad), R0.shape)
        raise DensityRangeError(float(R0[idx]), tuple(int(i) for i in idx), law.m0, law.M0)


def compatibility_defects(grid: Grid, v0, w0, w1) -> tuple[float, float]:
    """L2 norms of v3 on the bottom and of w1 - b_3i v_i on the plate."""
    maps = maps_from_plate(grid, w0, w1)
    top = np.einsum("i...,i...->...", maps.nu, v0[..., -1]) - w1
    bottom = v0[2, ..., 0]
    return (float(np.sqrt(grid.integrate_boundary(bottom**2))),
            float(np.sqrt(grid.integrate_boundary(top**2))))


def _plate_accel(grid: Grid, w, w_t, q_top):
    lap = lambda f: grid.laplacian_tangential(f, boundary=True)  # noqa: E731
    return -lap(lap(w)) + lap(w_t) + q_top


def build_jet(grid: Grid, v0, R0, w1, law: PressureLaw | None = None, w0=None,
              check: bool = True) -> InitialJet:
    law = law or PressureLaw()
    v0 = np.asarray(v0, dtype=float)
    R0 = np.asarray(R0, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    w0 = grid.bzeros() if w0 is None else np.asarray(w0, dtype=float)
    if v0.shape != (3,) + grid.shape or R0.shape != grid.shape:
        raise ValueError("v0 and R0 must be fields on the grid")
    if check:
        check_initial_density(R0, law)
        tol = COMPAT_TOL * (1.0 + np.sqrt(grid.integrate(np.sum(v0**2, axis=0))))
        bottom, top = compatibility_defects(grid, v0, w0, w1)
        if bottom > tol or top > tol:
            raise IncompatibleDataError(
                f"initial velocity incompatible: bottom {bottom:.3g}, plate {top:.3g} (tol {tol:.3g})")

    # normalized Taylor coefficients
    v = np.zeros((FLUID_DEPTH + 1,) + v0.shape)
    R = np.zeros((FLUID_DEPTH + 1,) + R0.shape)
    w = np.zeros((PLATE_DEPTH + 1,) + w0.shape)
    v[0], R[0], w[0], w[1] = v0, R0, w0, w1

    d1w0, d2w0 = grid.grad_tangential(w0, boundary=True)
    nu0 = np.stack([-d1w0, -d2w0, np.ones_like(w0)])
    for n in range(PLATE_DEPTH - 1):
        q_top = law.q(Series(R[: n + 1])[..., -1]).c[n]
        accel = _plate_accel(grid, w[n], (n + 1) * w[n + 1], q_top)
        w[n + 2] = accel / ((n + 2) * (n + 1))
        if n >= FLUID_DEPTH:
            continue
        ws = Series(w[: n + 1])
        wts = Series(w[1: n + 2] * np.arange(1, n + 2)[:, None, None])
        _, d1, d2, d3 = height_series(grid, ws)
        psi_t = _extension_series(grid, wts)
        dv, dR = fluid_tendency(grid, Series(v[: n + 1]), Series(R[: n + 1]),
                                d1, d2, d3, psi_t, law)
        v[n + 1] = dv.c[n] / (n + 1)
        R[n + 1] = dR.c[n] / (n + 1)
        _project_coefficient(grid, v, w, n + 1, nu0)
    return InitialJet(grid, law, Series(v).derivatives(), Series(R).derivatives(),
                      Series(w).derivatives(), maps_from_plate(grid, w0, w1))


def _project_coefficient(grid: Grid, v, w, n: int, nu0):
    """Impose the n-th time derivative of the boundary conditions on v[n].

    Mirrors the stepper's correction: v3 = 0 on the bottom, and on the plate
    the n-th coefficient of b_3i v_i - w_t is removed along the normal.
    """
    v[n][2, ..., 0] = 0.0
    ws = Series(w[: n + 1])
    d1w = linear(lambda c: grid.deriv_tangential(c, 1, boundary=True), ws)
    d2w = linear(lambda c: grid.deriv_tangential(c, 2, boundary=True), ws)
    top = Series(v[: n + 1])[..., -1]
    kin = top[2] - d1w * top[0] - d2w * top[1]
    defect = (n + 1) * w[n + 1] - kin.c[n]
    v[n][..., -1] += defect * nu0 / np.sum(nu0**2, axis=0)


def _extension_series(grid: Grid, w_t: Series) -> Series:
    psi, _, _, _ = height_series(grid, w_t)
    return psi - grid.x3


def total_energy_E0(jet: InitialJet) -> float:
    """Sum of the squared initial norms of the cascade.

    Interior terms ||d_t^j v||^2_{H^(3-j)} + ||d_t^j R||^2_{H^(3-j)}, plate
    terms ||d_t^j w||^2_{H^(8-2j)(top)}, plus ||R0||^2_{H^4(top)} and
    ||R_t(0)||^2_{H^2(top)}.
    """
    g = jet.grid
    total = 0.0
    for j in range(FLUID_DEPTH + 1):
        s = 3 - j
        total += sum(g.sobolev_norm(jet.v_jet[j, i], s) ** 2 for i in range(3))
        total += g.sobolev_norm(jet.R_jet[j], s) ** 2
    for j in range(PLATE_DEPTH + 1):
        total += g.sobolev_norm(jet.w_jet[j], 8 - 2 * j, "top") ** 2
    total += g.sobolev_norm(g.trace(jet.R_jet[0], 1), 4, "top") ** 2
    total += g.sobolev_norm(g.trace(jet.R_jet[1], 1), 2, "top") ** 2
    return float(total)


# -- analytic families -------------------------------------------------------

def bump_profile(x3, width: float = 0.8):
    """C-infinity profile, even about x3 = 0, identically zero for x3 >= width.

    Every odd derivative vanishes on the bottom and every derivative vanishes
    on the plate, so data built from it satisfy the boundary conditions to all
    orders.
    """
    s = np.asarray(x3, dtype=float) / width
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def family_steady(grid: Grid, law: PressureLaw, amplitude: float = 0.0):
    return grid.zeros(3), np.full(grid.shape, law.rbar), grid.bzeros()


def family_small(grid: Grid, law: PressureLaw, amplitude: float = 1e-3):
    """Density bump plus a vortical shear, both supported away from the plate."""
    X1, X2, X3 = grid.mesh()
    prof = bump_profile(X3)
    R0 = law.rbar * (1.0 + amplitude * np.cos(X1) * np.cos(X2) * prof)
    v0 = grid.zeros(3)
    v0[0] = amplitude * np.sin(X2) * prof
    v0[1] = 0.5 * amplitude * np.sin(X1) * prof
    return v0, np.broadcast_to(R0, grid.shape).copy(), grid.bzeros()


def family_plate(grid: Grid, law: PressureLaw, amplitude: float = 1e-3):
    """Plate velocity cos(x1) with the matching potential flow underneath."""
    X1, X2, X3 = grid.mesh()
    s = np.sinh(1.0)
    v0 = grid.zeros(3)
    v0[0] = -amplitude * np.sin(X1) * np.cosh(X3) / s + 0 * X2
    v0[2] = amplitude * np.cos(X1) * np.sinh(X3) / s + 0 * X2
    w1 = amplitude * np.cos(grid.bmesh()[0]) + 0 * grid.bmesh()[1]
    return v0, np.full(grid.shape, law.rbar), w1


def family_random(grid: Grid, law: PressureLaw, amplitude: float = 1e-3, seed: int = 0):
    """Random low-mode tangential velocity and density under the bump profile."""
    rng = np.random.default_rng(seed)
    X1, X2, X3 = grid.mesh()
    prof = bump_profile(X3)

    def lowmode():
        out = np.zeros(np.broadcast_shapes(X1.shape, X2.shape))
        for k1 in range(-2, 3):
            for k2 in range(0, 3):
                a, b = rng.standard_normal(2)
                out = out + a * np.cos(k1 * X1 + k2 * X2) + b * np.sin(k1 * X1 + k2 * X2)
        return out / 10.0

    v0 = grid.zeros(3)
    v0[0] = amplitude * lowmode() * prof
    v0[1] = amplitude * lowmode() * prof
    R0 = law.rbar * (1.0 + amplitude * lowmode() * prof)
    return v0, np.broadcast_to(R0, grid.shape).copy(), grid.bzeros()


FAMILIES = {"steady": family_steady, "small": family_small, "plate": family_plate,
            "random": family_random}


def initial_fields(grid: Grid, law: PressureLaw, family: str, amplitude: float,
                   seed: int = 0):
    """(v0, R0, w1) of a named analytic family; only ``random`` uses the seed."""
    try:
        fn = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown initial-data family {family!r}; "
                         f"choose from {sorted(FAMILIES)}") from None
    if family == "random":
        return fn(grid, law, amplitude, seed)
    return fn(grid, law, amplitude)
