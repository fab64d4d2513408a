"""Energy-identity ledgers evaluated on a window of solver states.

Each ledger takes m time derivatives of one equation, pairs it with the
matching multiplier and records every term of the resulting identity at the
window centre.  Commutator terms (the K's) are the difference between the
m-th derivative of a product and the product with the top derivative
only; the Leibniz expansion comes from Taylor-series products of windowed
fields.  The identity residual is |dE/dt - sum of signed terms|.

Channel integrals use the summation-by-parts norm of the stepper's vertical
operator, so the integration by parts behind the pressure terms is exact
in x3 up to the discrete Piola defect.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from ..grid import Grid
from ..taylor import Series
from .identities import grad
from .window import JetWindow

LEDGERS = ("momentum", "plate", "plate_weighted", "density")
# file tags used by the CLI
LEDGER_TAGS = {"momentum": "momentum", "plate": "plate", "plate_weighted": "plateW",
               "density": "density"}


@dataclass(frozen=True)
class LedgerRow:
    which: str
    m: int
    t: float
    energy: float
    rate: float
    terms: dict[str, float] = field(default_factory=dict)
    identity_residual: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {"t": self.t, "energy": self.energy, "rate": self.rate, **self.terms,
                "identity_residual": self.identity_residual}


def _integral(grid: Grid, f) -> float:
    return float(grid.cell_area * np.sum(np.asarray(f) @ grid.sbp_weights))


def _boundary_integral(grid: Grid, f) -> float:
    return float(grid.integrate_boundary(f))


def _dot(x, y):
    return np.einsum("i...,i...->...", x, y)


def product_series(spec: str, *ops: Series, order: int) -> Series:
    """Series of ``np.einsum(spec, *ops)`` up to ``order`` (Cauchy product)."""
    out = []
    for n in range(order + 1):
        acc = 0.0
        for idx in itertools.product(range(n + 1), repeat=len(ops)):
            if sum(idx) == n:
                acc = acc + np.einsum(spec, *(op.c[i] for op, i in zip(ops, idx)))
        out.append(acc)
    return Series(np.stack(out))


def _nth(s: Series, k: int) -> np.ndarray:
    """k-th time derivative at the window centre."""
    return factorial(k) * s.c[k]


def _dm(spec: str, *ops: Series, m: int) -> np.ndarray:
    """m-th time derivative of an einsum product at the centre."""
    return _nth(product_series(spec, *ops, order=m), m)


class _Fields:
    """Windowed series of the quantities the ledgers need."""

    def __init__(self, window: JetWindow, order: int):
        self.window = window
        self.grid = g = window.grid
        law = window.law
        ser = window.series
        self.t = window.center.t
        self.v = ser(lambda s: s.v, order)
        self.R = ser(lambda s: s.R, order)
        self.J = ser(lambda s: s.maps.J, order)
        self.b = ser(lambda s: s.maps.b, order)
        self.psi_t = ser(lambda s: s.maps.psi_t, order)
        self.q = ser(lambda s: law.q(s.R), order)
        self.dv = ser(lambda s: grad(g, s.v), order)  # dv[k, i] = d_k v_i
        self.dR = ser(lambda s: grad(g, s.R), order)
        self.dq = ser(lambda s: grad(g, law.q(s.R)), order)


def _require(window: JetWindow, m: int, extra: int):
    if not 0 <= m <= 3:
        raise ValueError("ledger order m must lie in 0..3")
    window._require(m + extra)


def momentum_ledger(window: JetWindow, m: int = 0) -> LedgerRow:
    """Velocity energy 1/2 int J R |d_t^m v|^2.

    dE/dt = K1 - K2 - I1 - K3 + K4 + I2 - K5 - I_B1.
    """
    _require(window, m, 1)
    f = _Fields(window, m + 1)
    g = f.grid
    V, Vt = _nth(f.v, m), _nth(f.v, m + 1)
    dV = _nth(f.dv, m)
    R0, psi_t0, b0 = f.R.c[0], f.psi_t.c[0], f.b.c[0]
    JR = product_series("...,...->...", f.J, f.R, order=m + 1)
    JR0, JRt = JR.c[0], _nth(JR, 1)
    Qm = _nth(f.q, m)
    VV = _dot(V, V)
    dVV = 2.0 * np.einsum("i...,ki...->k...", V, dV)  # d_k |V|^2 as 2 V . d_k V

    rate = _integral(g, 0.5 * JRt * VV + JR0 * _dot(V, Vt))
    vt = f.v.derivative()
    terms = {
        "K1": _integral(g, 0.5 * JRt * VV),
        "K2": _integral(g, _dot(_dm("...,i...->i...", JR, vt, m=m) - JR0 * Vt, V)),
        "I1": _integral(g, 0.5 * R0 * np.einsum("j...,kj...,k...->...", f.v.c[0], b0, dVV)
                        - 0.5 * R0 * psi_t0 * dVV[2]),
        "K3": _integral(g, _dot(
            _dm("j...,kj...,...,ki...->i...", f.v, f.b, f.R, f.dv, m=m)
            - np.einsum("j...,kj...,...,ki...->i...", f.v.c[0], b0, R0, dV), V)),
        "K4": _integral(g, _dot(
            _dm("...,...,i...->i...", f.R, f.psi_t, f.dv[2], m=m) - R0 * psi_t0 * dV[2], V)),
        "I2": _integral(g, Qm * np.einsum("ki...,ki...->...", b0, dV)),
        "K5": _integral(g, _dot(
            _dm("ki...,k...->i...", f.b, f.dq, m=m)
            - np.einsum("ki...,k...->i...", b0, _nth(f.dq, m)), V)),
        "I_B1": _boundary_integral(g, Qm[..., -1] * _dot(b0[2, ..., -1], V[..., -1])),
    }
    T = terms
    rhs = T["K1"] - T["K2"] - T["I1"] - T["K3"] + T["K4"] + T["I2"] - T["K5"] - T["I_B1"]
    energy = _integral(g, 0.5 * JR0 * VV)
    return LedgerRow("momentum", m, f.t, energy, rate, terms, abs(rate - rhs))


def _plate_parts(window: JetWindow, m: int, forcing):
    g = window.grid
    w = window.series(lambda s: s.w, m + 2)
    lap = lambda x: g.laplacian_tangential(x, boundary=True)  # noqa: E731
    u, u_t = _nth(w, m + 1), _nth(w, m + 2)
    z, z_t = lap(_nth(w, m)), lap(u)
    Qm = window.derivative(lambda s: window.law.q(s.R[..., -1]), m)
    if forcing is not None:
        Qm = Qm + window.derivative(lambda s: forcing.plate(s.t), m)
    return g, u, u_t, z, z_t, Qm


def boundary_terms(window: JetWindow, m: int = 0) -> dict[str, float]:
    """Split of int_top d_t^m q d_t^(m+1) w by the kinematic condition.

    d_t^(m+1) w = sum_j C(m, j) d_t^j b_3 . d_t^(m-j) v on the plate.  I_B2 is
    the j = m term (m >= 1), I_B3 the j = 1 term (m >= 2), I_B4 the j = 2
    term (m >= 3); the plate-side I_B1 is what remains of the full integral,
    which uses the windowed plate velocity instead of the fluid trace.
    """
    _require(window, m, 2)
    g = window.grid
    b3 = window.series(lambda s: s.maps.b3[..., -1], m)
    vt = window.series(lambda s: s.v[..., -1], m)
    Qm = window.derivative(lambda s: window.law.q(s.R[..., -1]), m)
    u = window.derivative(lambda s: s.w, m + 1)

    def piece(j):
        return comb(m, j) * _boundary_integral(g, Qm * _dot(_nth(b3, j), _nth(vt, m - j)))

    out = {"I_B2": piece(m) if m >= 1 else 0.0,
           "I_B3": piece(1) if m >= 2 else 0.0,
           "I_B4": piece(2) if m >= 3 else 0.0}
    out["I_B"] = _boundary_integral(g, Qm * u)
    out["I_B1_plate"] = out["I_B"] - out["I_B2"] - out["I_B3"] - out["I_B4"]
    out["I_B1_fluid"] = piece(0)
    return out


def plate_ledger(window: JetWindow, m: int = 0, forcing=None) -> LedgerRow:
    """d/dt (1/2 |u|^2 + 1/2 |z|^2) + |grad u|^2 = int d_t^m(q + f) u on the plate,
    with u = d_t^(m+1) w and z = Lap d_t^m w."""
    _require(window, m, 2)
    g, u, u_t, z, z_t, Qm = _plate_parts(window, m, forcing)
    gu = np.stack(g.grad_tangential(u, boundary=True))
    terms = {"rate_u": _boundary_integral(g, u * u_t),
             "rate_z": _boundary_integral(g, z * z_t),
             "dissipation": _boundary_integral(g, np.sum(gu**2, axis=0)),
             "load": _boundary_integral(g, Qm * u)}
    split = boundary_terms(window, m)
    terms.update({k: split[k] for k in ("I_B1_plate", "I_B2", "I_B3", "I_B4")})
    rate = terms["rate_u"] + terms["rate_z"]
    energy = _boundary_integral(g, 0.5 * (u * u + z * z))
    residual = abs(rate + terms["dissipation"] - terms["load"])
    return LedgerRow("plate", m, window.center.t, energy, rate, terms, residual)


def plate_weighted_ledger(window: JetWindow, m: int = 0, forcing=None) -> LedgerRow:
    """Plate energy with the weight phi = 1 / (J R) on the plate.

    d/dt 1/2 int phi u^2 + d/dt 1/2 int phi z^2 + int phi |grad u|^2
      = -1/2 int d_t(JR)/(JR)^2 (u^2 + z^2) + 2 int z G.grad u + int u G.grad u
        + int u z div G + int phi d_t^m(q + f) u,
    with G = grad(JR) / (JR)^2.
    """
    _require(window, m, 2)
    g, u, u_t, z, z_t, Qm = _plate_parts(window, m, forcing)
    JR = window.series(lambda s: s.maps.J[..., -1] * s.R[..., -1], 1)
    JR0, JRt = JR.c[0], JR.c[1]
    phi, phi_t = 1.0 / JR0, -JRt / JR0**2
    G = np.stack(g.grad_tangential(JR0, boundary=True)) / JR0**2
    div_G = (g.deriv_tangential(G[0], 1, boundary=True)
             + g.deriv_tangential(G[1], 2, boundary=True))
    gu = np.stack(g.grad_tangential(u, boundary=True))
    G_gu = _dot(G, gu)
    ii = lambda x: _boundary_integral(g, x)  # noqa: E731
    terms = {
        "rate_u": ii(0.5 * phi_t * u * u + phi * u * u_t),
        "rate_z": ii(0.5 * phi_t * z * z + phi * z * z_t),
        "dissipation": ii(phi * np.sum(gu**2, axis=0)),
        "weight_rate": ii(-0.5 * JRt / JR0**2 * (u * u + z * z)),
        "cross_zu": ii(2.0 * z * G_gu),
        "cross_uu": ii(u * G_gu),
        "cross_div": ii(u * z * div_G),
        "load": ii(phi * Qm * u),
    }
    T = terms
    lhs = T["rate_u"] + T["rate_z"] + T["dissipation"]
    rhs = T["weight_rate"] + T["cross_zu"] + T["cross_uu"] + T["cross_div"] + T["load"]
    energy = ii(0.5 * phi * (u * u + z * z))
    return LedgerRow("plate_weighted", m, window.center.t, energy,
                     T["rate_u"] + T["rate_z"], terms, abs(lhs - rhs))


def density_ledger(window: JetWindow, m: int = 0) -> LedgerRow:
    """Density energy 1/2 int J phi P^2 with phi = q'(R) / R, P = d_t^m (R - Rbar).

    Subtracting the reference density only matters at m = 0, where it keeps
    the terms at the size of the perturbation.

    dE/dt = I0 - K6 + K7 - I2 - I3 - K8 - K9 - K10 + K11.
    """
    _require(window, m, 1)
    f = _Fields(window, m + 1)
    g = f.grid
    law = window.law
    phi = window.series(lambda s: law.dq_over_R(s.R), m + 1)
    P, Pt = _nth(f.R, m), _nth(f.R, m + 1)
    if m == 0:
        P = P - law.rbar
    dP = _nth(f.dR, m)
    dVm = _nth(f.dv, m)
    v0, b0, R0, psi_t0, phi0 = f.v.c[0], f.b.c[0], f.R.c[0], f.psi_t.c[0], phi.c[0]
    Jphi = product_series("...,...->...", f.J, phi, order=m + 1)
    Jphi0 = Jphi.c[0]
    Qm = _nth(f.q, m)
    Rt = f.R.derivative()
    JphiRt = _dm("...,...->...", Jphi, Rt, m=m)
    div_m = np.einsum("ji...,ji...->...", b0, dVm)  # b_ji d_t^m d_j v_i
    dPP = 2.0 * P * dP  # d_j (P^2) as 2 P d_j P

    rate = _integral(g, 0.5 * _nth(Jphi, 1) * P * P + Jphi0 * P * Pt)
    terms = {
        "I0": _integral(g, 0.5 * _nth(Jphi, 1) * P * P),
        "K6": _integral(g, (JphiRt - Jphi0 * Pt) * P),
        "K7": _integral(g, (JphiRt - phi0 * _dm("...,...->...", f.J, Rt, m=m)) * P),
        "I2": _integral(g, div_m * Qm),
        "I3": _integral(g, 0.5 * phi0 * np.einsum("i...,ji...,j...->...", v0, b0, dPP)
                        - 0.5 * phi0 * psi_t0 * dPP[2]),
        "K8": _integral(g, phi0 * (_dm("...,ji...,ji...->...", f.R, f.b, f.dv, m=m)
                                   - R0 * div_m) * P),
        "K9": _integral(g, div_m * (law.dq(R0) * P - Qm)),
        "K10": _integral(g, phi0 * (_dm("i...,ji...,j...->...", f.v, f.b, f.dR, m=m)
                                    - np.einsum("i...,ji...,j...->...", v0, b0, dP)) * P),
        "K11": _integral(g, phi0 * (_dm("...,...->...", f.psi_t, f.dR[2], m=m)
                                    - psi_t0 * dP[2]) * P),
    }
    T = terms
    rhs = (T["I0"] - T["K6"] + T["K7"] - T["I2"] - T["I3"] - T["K8"] - T["K9"]
           - T["K10"] + T["K11"])
    energy = _integral(g, 0.5 * Jphi0 * P * P)
    return LedgerRow("density", m, f.t, energy, rate, terms, abs(rate - rhs))


def energy_ledger(window: JetWindow, which: str, m: int = 0, forcing=None) -> LedgerRow:
    if which == "momentum":
        return momentum_ledger(window, m)
    if which == "plate":
        return plate_ledger(window, m, forcing)
    if which == "plate_weighted":
        return plate_weighted_ledger(window, m, forcing)
    if which == "density":
        return density_ledger(window, m)
    raise ValueError(f"unknown ledger {which!r}; choose from {LEDGERS}")
