"""Pointwise residuals of identities derived from the ALE system.

Spatial first derivatives use the same vertical operator as the stepper, so
on a discrete trajectory the residuals measure time-stepping error, product
rule defects of the difference operators and the boundary corrections.
Time derivatives come from a :class:`JetWindow`.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..geometry import flat_gradient, maps_from_plate
from ..grid import Grid
from .window import JetWindow


def grad(grid: Grid, f) -> np.ndarray:
    """Flat gradient, component index first: ``grad(f)[k] = d_k f``."""
    return flat_gradient(grid, f, transport=True)


def _contract(x, y):
    return np.einsum("k...,k...->...", x, y)


def ale_divergence(a, dv) -> np.ndarray:
    """a_ki d_k v_i from the flat derivative table ``dv[k, i] = d_k v_i``."""
    return np.einsum("ki...,ki...->...", a, dv)


def ale_curl(a, dv) -> np.ndarray:
    """epsilon_ijk a_mj d_m v_k."""
    G = np.einsum("mj...,mk...->jk...", a, dv)
    return np.stack([G[1, 2] - G[2, 1], G[2, 0] - G[0, 2], G[0, 1] - G[1, 0]])


def apply_Q(state, f, f_t) -> np.ndarray:
    """Q f = f_t + (v - eta_t)_i a_ki d_k f for a scalar or a stack of scalars."""
    f = np.asarray(f, dtype=float)
    W = state.maps.transport_velocity(state.v)
    W = W.reshape(W.shape[:1] + (1,) * (f.ndim - 3) + W.shape[1:])
    return f_t + _contract(W, grad(state.grid, f))


def tangency_residual(state) -> tuple[float, float]:
    """Max of |(v - eta_t)_i a_3i| on the bottom and on the plate."""
    W3 = state.maps.transport_velocity(state.v)[2]
    return float(np.max(np.abs(W3[..., 0]))), float(np.max(np.abs(W3[..., -1])))


def _transport(state):
    return state.maps.transport_velocity(state.v)


def _log_density(state):
    return np.log(state.R)


class GResidual(NamedTuple):
    interior: np.ndarray
    top: np.ndarray
    bottom: np.ndarray

    def norms(self, grid: Grid) -> tuple[float, float, float]:
        """L2 norms over the channel, the plate and the bottom."""
        return (float(np.sqrt(grid.integrate(self.interior**2))),
                float(np.sqrt(grid.integrate_boundary(self.top**2))),
                float(np.sqrt(grid.integrate_boundary(self.bottom**2))))


def source_F(window: JetWindow) -> np.ndarray:
    """Lower-order source of the log-density wave equation.

    F = -d_t a_mi d_m v_i + a_mi d_m W_k d_k v_i - W_k d_k a_mi d_m v_i,
    with W the contravariant transport velocity.
    """
    s = window.center
    g = s.grid
    a = s.maps.a
    a_t = window.derivative(lambda st: st.maps.a, 1)
    W = _transport(s)
    dv = grad(g, s.v)
    dW = grad(g, W)
    da = grad(g, a)
    return (-np.einsum("mi...,mi...->...", a_t, dv)
            + np.einsum("mi...,mk...,ki...->...", a, dW, dv)
            - np.einsum("k...,kmi...,mi...->...", W, da, dv))


def h_boundary(window: JetWindow) -> np.ndarray:
    """Neumann datum h on the plate.

    h = d_t b_3i v_i - w_tt + sum_{j<=2} d_j b_3i W_j v_i - sum_{j<=2} d_j w_t W_j;
    on the plate b_3 = (-d1 w, -d2 w, 1) and W_j = v_j for j = 1, 2.
    """
    s = window.center
    g = s.grid
    top = s.v[..., -1]
    w_tt = window.derivative(lambda st: st.w_t, 1)
    d1wt, d2wt = g.grad_tangential(s.w_t, boundary=True)
    b3_t = np.stack([-d1wt, -d2wt, np.zeros_like(d1wt)])
    d11 = g.deriv_tangential(s.w, 1, 2, boundary=True)
    d22 = g.deriv_tangential(s.w, 2, 2, boundary=True)
    d12 = g.deriv_tangential(g.deriv_tangential(s.w, 1, boundary=True), 2, boundary=True)
    d1b3 = np.stack([-d11, -d12, np.zeros_like(d11)])
    d2b3 = np.stack([-d12, -d22, np.zeros_like(d11)])
    return (_contract(b3_t, top) - w_tt
            + top[0] * _contract(d1b3, top) + top[1] * _contract(d2b3, top)
            - d1wt * top[0] - d2wt * top[1])


def h_extension(window: JetWindow) -> np.ndarray:
    """The same expression with w replaced by the height psi throughout."""
    s = window.center
    g = s.grid
    m = s.maps
    w_tt = window.derivative(lambda st: st.w_t, 1)
    psi_tt = maps_from_plate(g, np.zeros_like(w_tt), w_tt, check=False).psi_t
    d1pt, d2pt = g.grad_tangential(m.psi_t, boundary=False)
    b3_t = np.stack([-d1pt, -d2pt, np.zeros_like(d1pt)])
    d1b3 = g.deriv_tangential(m.b3, 1, boundary=False)
    d2b3 = g.deriv_tangential(m.b3, 2, boundary=False)
    W = m.transport_velocity(s.v)
    v = s.v
    return (_contract(b3_t, v) - psi_tt
            + W[0] * _contract(d1b3, v) + W[1] * _contract(d2b3, v)
            - d1pt * W[0] - d2pt * W[1])


def g_equation_residual(window: JetWindow) -> GResidual:
    """Residuals of the wave equation for g = log R and its boundary data.

    interior: Q^2 g - div_a(q'(R) grad_a g) - F, with Q^2 expanded as
    g_tt + 2 W.grad g_t + W_t.grad g + W_k (d_k W_m) d_m g + W_k W_m d_km g;
    top: q'(R) grad_a g . nu - h;  bottom: d_3 g.
    """
    s = window.center
    g = s.grid
    m = s.maps
    a = m.a
    gg = np.log(s.R)
    g_t = window.derivative(_log_density, 1)
    g_tt = window.derivative(_log_density, 2)
    W = _transport(s)
    W_t = window.derivative(_transport, 1)
    dg = grad(g, gg)
    dg_t = grad(g, g_t)
    ddg = grad(g, dg)  # ddg[m, k] = d_m d_k g
    dW = grad(g, W)
    Q2 = (g_tt + 2.0 * _contract(W, dg_t) + _contract(W_t, dg)
          + np.einsum("k...,km...,m...->...", W, dW, dg)
          + np.einsum("k...,m...,km...->...", W, W, ddg))
    f = window.law.dq(s.R)
    flux = f * np.einsum("ki...,k...->i...", a, dg)  # f grad_a g
    interior = Q2 - ale_divergence(a, grad(g, flux)) - source_F(window)
    top = _contract(m.nu, flux[..., -1]) - h_boundary(window)
    bottom = dg[2, ..., 0]
    return GResidual(interior, top, bottom)


def vorticity_and_residual(window: JetWindow) -> tuple[np.ndarray, np.ndarray]:
    """ALE vorticity zeta = curl_a v and the defect of its transport equation.

    residual_i = d_t zeta_i + W_k d_k zeta_i - zeta_l a_kl d_k v_i + (div_a v) zeta_i.
    """
    s = window.center
    g = s.grid
    a = s.maps.a

    def vorticity(st):
        return ale_curl(st.maps.a, grad(st.grid, st.v))

    zeta = vorticity(s)
    zeta_t = window.derivative(vorticity, 1)
    W = _transport(s)
    dv = grad(g, s.v)
    dz = grad(g, zeta)
    stretch = np.einsum("l...,kl...,ki...->i...", zeta, a, dv)
    residual = (zeta_t + np.einsum("k...,ki...->i...", W, dz) - stretch
                + ale_divergence(a, dv) * zeta)
    return zeta, residual


def divergence_identity_residual(window: JetWindow) -> np.ndarray:
    """div_a v + (d_t R + W_k d_k R) / R, the continuity equation over R."""
    s = window.center
    R_t = window.derivative(lambda st: st.R, 1)
    dR = grad(s.grid, s.R)
    H = ale_divergence(s.maps.a, grad(s.grid, s.v))
    return H + (R_t + _contract(_transport(s), dR)) / s.R


def continuity_form_residual(window: JetWindow) -> np.ndarray:
    """Q g + div_a v with g_t = R_t / R and grad g = grad R / R.

    Written through the chain rule it is the same expression as
    :func:`divergence_identity_residual`; the two must agree to rounding.
    """
    s = window.center
    R_t = window.derivative(lambda st: st.R, 1)
    dg = grad(s.grid, s.R) / s.R
    H = ale_divergence(s.maps.a, grad(s.grid, s.v))
    return R_t / s.R + _contract(_transport(s), dg) + H


def l2(grid: Grid, f) -> float:
    """L2 norm over the channel, leading axes summed as components."""
    f = np.asarray(f)
    sq = f**2 if f.ndim == 3 else np.sum(f**2, axis=tuple(range(f.ndim - 3)))
    return float(np.sqrt(grid.integrate(sq)))
