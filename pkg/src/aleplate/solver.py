"""Time integration of the coupled ALE Euler / plate system.

One step is an integrating-factor (Lawson) RK4 method: the plate's linear
operator w_tt = -Lap^2 w + Lap w_t is propagated exactly mode by mode, while
fluid transport, pressure and the plate load q(R)|top are explicit RK4
stages.  After every stage the fluid velocity is corrected on the boundaries
(normal component on the bottom, kinematic condition on the plate).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .geometry import AleMaps, height_series, maps_from_plate
from .grid import Grid
from .pressure import PressureLaw
from .taylor import Series, linear, stack


@dataclass(frozen=True, eq=False)
class State:
    """Fluid fields on the channel plus plate fields on the top torus."""

    grid: Grid
    t: float
    v: np.ndarray
    R: np.ndarray
    w: np.ndarray
    w_t: np.ndarray

    @cached_property
    def maps(self) -> AleMaps:
        return maps_from_plate(self.grid, self.w, self.w_t)

    def kinematic_residual(self) -> float:
        """|| b_3i v_i - w_t ||_{L^2(top)}."""
        nu = self.maps.nu
        r = np.einsum("i...,i...->...", nu, self.v[..., -1]) - self.w_t
        return float(np.sqrt(self.grid.integrate_boundary(r * r)))

    def mass(self) -> float:
        """Mass of the moving domain, the integral of J R over the channel."""
        return float(self.grid.integrate(self.maps.J * self.R))

    def reflect_x1(self) -> "State":
        """Mirror image under x1 -> -x1 (v1 changes sign)."""
        idx = (-np.arange(self.grid.n1)) % self.grid.n1
        v = self.v[:, idx].copy()
        v[0] *= -1
        return replace(self, v=v, R=self.R[idx].copy(), w=self.w[idx].copy(),
                       w_t=self.w_t[idx].copy())


def steady_state(grid: Grid, law: PressureLaw, t: float = 0.0) -> State:
    return State(grid, t, grid.zeros(3), np.full(grid.shape, law.rbar),
                 grid.bzeros(), grid.bzeros())


def fluid_tendency(grid: Grid, v, R, d1psi, d2psi, J, psi_t, law: PressureLaw):
    """(dv/dt, dR/dt) of the ALE Euler system.

    Works on ndarrays and on :class:`~aleplate.taylor.Series` alike:
    dv_i/dt = -W_k d_k v_i - (q'(R)/R) a_ki d_k R and
    dR/dt = -W_k d_k R - R a_ki d_k v_i, with W_k = (v_i - psi_t delta_i3) a_ki.
    """
    U = stack([v[0], v[1], v[2], R])
    if isinstance(U, Series):
        dU1 = linear(lambda c: grid.deriv_tangential(c, 1, boundary=False), U)
        dU2 = linear(lambda c: grid.deriv_tangential(c, 2, boundary=False), U)
    else:
        dU1, dU2 = grid.grad_tangential(U, boundary=False)
    dU3 = linear(lambda c: grid.deriv_vertical(c, transport=True), U)

    inv = 1.0 / J
    a31 = -d1psi * inv
    a32 = -d2psi * inv
    a33 = inv
    W3 = a31 * v[0] + a32 * v[1] + a33 * (v[2] - psi_t)
    adv = v[0] * dU1 + v[1] * dU2 + W3 * dU3

    R1, R2, R3 = dU1[3], dU2[3], dU3[3]
    c = law.dq_over_R(R)
    grad_R = stack([R1 + a31 * R3, R2 + a32 * R3, a33 * R3])
    div_v = dU1[0] + a31 * dU3[0] + dU2[1] + a32 * dU3[1] + a33 * dU3[2]
    return -adv[0:3] - c * grad_R, -adv[3] - R * div_v


def rhs_fluid(state: State, law: PressureLaw, dealias: bool = True):
    """Fluid tendencies at a state, geometry taken from its plate fields.

    ``dealias`` applies the 2/3 rule to the result; the stepper instead
    filters the state once per step.
    """
    m = state.maps
    dv, dR = fluid_tendency(state.grid, state.v, state.R, m.dpsi[0], m.dpsi[1],
                            m.J, m.psi_t, law)
    if dealias:
        g = state.grid
        dv, dR = g.dealias(dv, boundary=False), g.dealias(dR, boundary=False)
    return dv, dR


def rhs_plate(grid: Grid, w, w_t, q_trace):
    """w_tt = -Lap_h^2 w + Lap_h w_t + q on the top torus (spectral)."""
    wh, axes = grid.fft(w, boundary=True)
    wth, _ = grid.fft(w_t, boundary=True)
    k2 = grid.ksq
    return grid.ifft(-k2 * k2 * wh - k2 * wth, axes) + q_trace


def plate_propagator(grid: Grid, h: float):
    """Entries of exp(h L) per mode, L = [[0, 1], [-|k|^4, -|k|^2]]."""
    k2 = grid.ksq
    mu = -0.5 * k2
    om = 0.5 * np.sqrt(3.0) * k2
    decay = np.exp(mu * h)
    cos = np.cos(om * h)
    sinc = h * np.sinc(om * h / np.pi)  # sin(om h)/om, -> h at k = 0
    return (decay * (cos + 0.5 * k2 * sinc), decay * sinc,
            -k2 * k2 * decay * sinc, decay * (cos - 0.5 * k2 * sinc))


class Solver:
    """Integrator for the coupled system on a fixed grid.

    ``forcing`` (optional) supplies manufactured source terms through
    ``fluid(t) -> (fv, fR)``, ``plate(t)`` and ``kinematic(t)``; the last one
    shifts the kinematic target to ``w_t + kinematic(t)``.
    """

    def __init__(self, grid: Grid, law: PressureLaw | None = None, *, forcing=None,
                 evolve_fluid: bool = True, dealias: bool = True):
        self.grid = grid
        self.law = law or PressureLaw()
        self.forcing = forcing
        self.evolve_fluid = evolve_fluid
        self.dealias = dealias
        self._prop: dict[float, tuple] = {}

    # -- pieces ------------------------------------------------------------

    def tendencies(self, state: State):
        g = self.grid
        if self.evolve_fluid:
            dv, dR = rhs_fluid(state, self.law, dealias=False)
        else:
            dv, dR = np.zeros_like(state.v), np.zeros_like(state.R)
        dwt = self.law.q(g.trace(state.R, 1))
        if self.forcing is not None:
            if self.evolve_fluid:
                fv, fR = self.forcing.fluid(state.t)
                dv = dv + fv
                dR = dR + fR
            dwt = dwt + self.forcing.plate(state.t)
        return dv, dR, dwt

    def enforce_boundary(self, t: float, v, w, w_t):
        """Zero normal velocity on the bottom; b_3i v_i = w_t on the plate.

        The plate condition is met by the minimal correction along the moving
        normal nu = (-d1 w, -d2 w, 1) at the top node layer.
        """
        if not self.evolve_fluid:
            return v
        v = v.copy()
        v[2, ..., 0] = 0.0
        d1w, d2w = self.grid.grad_tangential(w, boundary=True)
        nu = np.stack([-d1w, -d2w, np.ones_like(w)])
        target = w_t
        if self.forcing is not None:
            target = target + self.forcing.kinematic(t)
        top = v[..., -1]
        lam = (target - np.einsum("i...,i...->...", nu, top)) / np.einsum("i...,i...->...", nu, nu)
        v[..., -1] = top + lam * nu
        return v

    def _propagator(self, h: float):
        if h not in self._prop:
            self._prop[h] = plate_propagator(self.grid, h)
        return self._prop[h]

    def _apply(self, h: float, w, wt):
        e11, e12, e21, e22 = self._propagator(h)
        wh, axes = self.grid.fft(w, boundary=True)
        wth, _ = self.grid.fft(wt, boundary=True)
        return (self.grid.ifft(e11 * wh + e12 * wth, axes),
                self.grid.ifft(e21 * wh + e22 * wth, axes))

    def _stage(self, base: State, t, v, R, w, wt) -> State:
        v = self.enforce_boundary(t, v, w, wt)
        return State(self.grid, t, v, R, w, wt)

    # -- stepping ----------------------------------------------------------

    def step(self, state: State, dt: float) -> State:
        h = dt
        t = state.t
        v, R, w, wt = state.v, state.R, state.w, state.w_t

        k1 = self.tendencies(state)
        w2, wt2 = self._apply(h / 2, w, wt + h / 2 * k1[2])
        s2 = self._stage(state, t + h / 2, v + h / 2 * k1[0], R + h / 2 * k1[1], w2, wt2)

        k2 = self.tendencies(s2)
        Ew, Ewt = self._apply(h / 2, w, wt)
        s3 = self._stage(state, t + h / 2, v + h / 2 * k2[0], R + h / 2 * k2[1],
                         Ew, Ewt + h / 2 * k2[2])

        k3 = self.tendencies(s3)
        Fw, Fwt = self._apply(h, w, wt)
        Gw, Gwt = self._apply(h / 2, 0.0 * w, h * k3[2])
        s4 = self._stage(state, t + h, v + h * k3[0], R + h * k3[1], Fw + Gw, Fwt + Gwt)

        k4 = self.tendencies(s4)
        v_new = v + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        R_new = R + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        aw, awt = self._apply(h, w, wt + h / 6 * k1[2])
        bw, bwt = self._apply(h / 2, 0.0 * w, h / 3 * (k2[2] + k3[2]))
        w_new = aw + bw
        wt_new = awt + bwt + h / 6 * k4[2]
        if self.dealias:
            g = self.grid
            fields = g.dealias(np.concatenate([v_new, R_new[None]]), boundary=False)
            v_new, R_new = fields[:3], fields[3]
            w_new, wt_new = g.dealias(np.stack([w_new, wt_new]), boundary=True)
        return self._stage(state, t + h, v_new, R_new, w_new, wt_new)

    def advance(self, state: State, dt: float, nsteps: int) -> State:
        for _ in range(nsteps):
            state = self.step(state, dt)
        return state

    def initial_state(self, t, v, R, w, w_t) -> State:
        """State with the boundary conditions imposed on ``v``."""
        v = self.enforce_boundary(t, np.asarray(v, dtype=float), w, w_t)
        return State(self.grid, t, v, np.asarray(R, dtype=float), np.asarray(w, dtype=float),
                     np.asarray(w_t, dtype=float))


def cfl_dt(state: State, law: PressureLaw, safety: float = 0.5) -> float:
    """Stable step estimate.

    dt = safety * min over nodes of
    min(dx1 / (|W1| + c), dx2 / (|W2| + c), dx3 / (|W3| + c |a_3.|)),
    with W the contravariant transport velocity, c = sqrt(q'(R)) the sound
    speed and |a_3.| the length of the third row of a.
    """
    if not 0 < safety <= 1:
        raise ValueError("safety must lie in (0, 1]")
    g = state.grid
    m = state.maps
    W = m.transport_velocity(state.v)
    c = np.sqrt(law.dq(state.R))
    metric = np.sqrt(np.sum(m.a3 ** 2, axis=0))
    dx1 = 2 * np.pi / g.n1
    dx2 = 2 * np.pi / g.n2
    bound = min(float(np.min(dx1 / (np.abs(W[0]) + c))),
                float(np.min(dx2 / (np.abs(W[1]) + c))),
                float(np.min(g.h3 / (np.abs(W[2]) + c * metric))))
    return safety * bound
