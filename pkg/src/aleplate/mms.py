"""Manufactured solutions and convergence studies.

Analytic fields are sums of separable terms c * f1(x1) f2(x2) f3(x3) T(t)
whose factors know their own derivatives, so forcing is evaluated from exact
derivatives without a symbolic engine.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import log2, pi

import numpy as np
from numpy.polynomial import Polynomial

from .grid import Grid
from .pressure import PressureLaw
from .solver import Solver, State

# -- one-dimensional factors ---------------------------------------------------


@dataclass(frozen=True)
class Trig:
    """sin(k x + phase)."""

    k: float
    phase: float = 0.0

    def __call__(self, x):
        return np.sin(self.k * x + self.phase)

    def deriv(self):
        return self.k, Trig(self.k, self.phase + pi / 2)


@dataclass(frozen=True)
class Hyp:
    """sinh(k x) if ``odd`` else cosh(k x)."""

    k: float
    odd: bool

    def __call__(self, x):
        return np.sinh(self.k * x) if self.odd else np.cosh(self.k * x)

    def deriv(self):
        return self.k, Hyp(self.k, not self.odd)


@dataclass(frozen=True)
class Poly:
    coef: tuple[float, ...]

    def __call__(self, x):
        return Polynomial(self.coef)(x)

    def deriv(self):
        d = Polynomial(self.coef).deriv().coef
        return 1.0, Poly(tuple(float(c) for c in d))


def sin(k=1.0):
    return Trig(k)


def cos(k=1.0):
    return Trig(k, pi / 2)


ONE = Poly((1.0,))


@dataclass(frozen=True)
class Term:
    coef: float
    factors: tuple  # (x1, x2, x3, t)

    def __call__(self, x1, x2, x3, t):
        f1, f2, f3, ft = self.factors
        return self.coef * ft(t) * f1(x1) * f2(x2) * f3(x3)


@dataclass(frozen=True)
class Field:
    """Sum of separable terms; ``d(axis)`` differentiates (axis 3 is time)."""

    terms: tuple[Term, ...] = ()

    def __call__(self, x1, x2, x3, t):
        out = 0.0 * (x1 + x2 + x3)
        for term in self.terms:
            out = out + term(x1, x2, x3, t)
        return out

    def d(self, axis: int) -> "Field":
        out = []
        for term in self.terms:
            scale, f = term.factors[axis].deriv()
            if scale == 0.0 or term.coef == 0.0:
                continue
            factors = list(term.factors)
            factors[axis] = f
            out.append(Term(term.coef * scale, tuple(factors)))
        return Field(tuple(out))

    def __add__(self, other: "Field") -> "Field":
        return Field(self.terms + other.terms)

    def __rmul__(self, c: float) -> "Field":
        return Field(tuple(Term(c * t.coef, t.factors) for t in self.terms))


def field(coef, f1=ONE, f2=ONE, f3=ONE, ft=ONE) -> Field:
    return Field((Term(float(coef), (f1, f2, f3, ft)),))


ZERO = Field()


def harmonic_extension(w: Field) -> Field:
    """Continuous harmonic extension (value w at x3 = 1, 0 at x3 = 0).

    Every term of ``w`` must be x3-independent with trigonometric tangential
    factors.
    """
    out = []
    for term in w.terms:
        f1, f2, f3, ft = term.factors
        if f3 != ONE:
            raise ValueError("plate fields must not depend on x3")
        k = float(np.hypot(f1.k if isinstance(f1, Trig) else 0.0,
                           f2.k if isinstance(f2, Trig) else 0.0))
        if k == 0.0:
            out.append(Term(term.coef, (f1, f2, Poly((0.0, 1.0)), ft)))
        else:
            out.append(Term(term.coef / np.sinh(k), (f1, f2, Hyp(k, True), ft)))
    return Field(tuple(out))


# -- cases ---------------------------------------------------------------------


@dataclass(frozen=True)
class MmsCase:
    """Analytic triple (v, R, w) of a forced problem.

    ``evolve_fluid=False`` freezes the fluid at its initial value (plate-only
    case); ``kinematic_forced`` records that the plate velocity differs from
    b_3i v_i on the plate and the difference is imposed as boundary forcing.
    """

    name: str
    v: tuple[Field, Field, Field]
    R: Field
    w: Field
    T: float = 0.5
    evolve_fluid: bool = True
    kinematic_forced: bool = False
    description: str = ""

    @property
    def psi_ext(self) -> Field:
        return harmonic_extension(self.w)


def _case_a(eps: float = 0.1) -> MmsCase:
    v1 = field(eps, f2=sin(), f3=cos(pi), ft=cos())
    v2 = field(eps, f1=cos(), f3=Poly((0.0, 0.0, 1.0)), ft=sin())
    v3 = field(eps, f1=sin(), f3=sin(pi), ft=sin())
    # cos(x1 + x2) = cos x1 cos x2 - sin x1 sin x2
    R = (field(1.0) + field(eps, f1=cos(), f2=cos(), f3=cos(pi), ft=sin())
         + field(-eps, f1=sin(), f2=sin(), f3=cos(pi), ft=sin()))
    return MmsCase("a", (v1, v2, v3), R, ZERO,
                   description="frozen geometry, fluid only (w = 0, v3 = 0 on both walls)")


def _case_b(eps: float = 0.01) -> MmsCase:
    # w = eps cos(x1 + t)
    w = field(eps, f1=cos(), ft=cos()) + field(-eps, f1=sin(), ft=sin())
    return MmsCase("b", (ZERO, ZERO, ZERO), field(1.0), w, T=1.0, evolve_fluid=False,
                   description="plate only, fluid frozen at rest")


def _case_c(eps: float = 1e-3) -> MmsCase:
    w = field(eps, f1=cos(), ft=cos()) + field(-eps, f1=sin(), ft=sin())
    v1 = field(eps, f2=sin(), f3=cos(pi), ft=cos())
    v2 = field(eps, f1=cos(), f3=Poly((0.0, 0.0, 1.0)), ft=sin())
    v3 = field(eps, f1=cos(), f3=sin(pi / 2), ft=sin())
    R = (field(1.0) + field(eps, f1=cos(), f2=cos(), f3=cos(pi), ft=cos())
         + field(-eps, f1=sin(), f2=sin(), f3=cos(pi), ft=cos()))
    return MmsCase("c", (v1, v2, v3), R, w, kinematic_forced=True,
                   description="coupled, amplitude 1e-3, time-periodic")


CATALOG = {"a": _case_a, "b": _case_b, "c": _case_c}


def build_case(name: str) -> MmsCase:
    try:
        return CATALOG[name]()
    except KeyError:
        raise ValueError(f"unknown MMS case {name!r}; choose from {sorted(CATALOG)}") from None


# -- forcing -------------------------------------------------------------------


class Forcing:
    """Source terms that make the analytic triple an exact solution.

    fluid: v_t + W_k d_k v + (q'/R) a_ki d_k R and R_t + W_k d_k R + R a_ki d_k v_i;
    plate: w_tt + Lap^2 w - Lap w_t - q(R)|top;
    kinematic: b_3i v_i - w_t on the plate.
    """

    def __init__(self, case: MmsCase, grid: Grid, law: PressureLaw):
        self.case, self.grid, self.law = case, grid, law
        self.X = grid.mesh()
        B1, B2 = grid.bmesh()
        self.B = (B1, B2, np.ones_like(B1))
        v, R, w, psi = case.v, case.R, case.w, case.psi_ext
        self._v = [(vi, vi.d(0), vi.d(1), vi.d(2), vi.d(3)) for vi in v]
        self._R = (R, R.d(0), R.d(1), R.d(2), R.d(3))
        self._psi = (psi.d(0), psi.d(1), psi.d(2), psi.d(3))
        lap = lambda f: f.d(0).d(0) + f.d(1).d(1)  # noqa: E731
        w_t = w.d(3)
        self._plate = (w_t.d(3), lap(lap(w)), lap(w_t))
        self._w = (w, w.d(0), w.d(1), w_t)

    def fluid(self, t):
        X = self.X
        law = self.law
        ev = lambda f: f(*X, t)  # noqa: E731
        d1psi, d2psi, d3psi, psi_t = (ev(f) for f in self._psi)
        d3psi = d3psi + 1.0  # psi = x3 + ext(w)
        a31, a32, a33 = -d1psi / d3psi, -d2psi / d3psi, 1.0 / d3psi
        vals = [[ev(f) for f in comp] for comp in self._v]
        v = [c[0] for c in vals]
        W = (v[0], v[1], a31 * v[0] + a32 * v[1] + a33 * (v[2] - psi_t))
        R, R1, R2, R3, Rt = (ev(f) for f in self._R)
        c = law.dq_over_R(R)
        grad_R = (R1 + a31 * R3, R2 + a32 * R3, a33 * R3)
        fv = np.stack([vals[i][4] + W[0] * vals[i][1] + W[1] * vals[i][2] + W[2] * vals[i][3]
                       + c * grad_R[i] for i in range(3)])
        div = (vals[0][1] + a31 * vals[0][3] + vals[1][2] + a32 * vals[1][3]
               + a33 * vals[2][3])
        fR = Rt + W[0] * R1 + W[1] * R2 + W[2] * R3 + R * div
        return fv, fR

    def plate(self, t):
        w_tt, bilap, lap_wt = (f(*self.B, t) for f in self._plate)
        return w_tt + bilap - lap_wt - self.law.q(self.case.R(*self.B, t))

    def kinematic(self, t):
        if not self.case.kinematic_forced:
            return np.zeros(self.grid.bshape)
        _, w1, w2, w_t = (f(*self.B, t) for f in self._w)
        v = [vi(*self.B, t) for vi in self.case.v]
        return v[2] - w1 * v[0] - w2 * v[1] - w_t

    def exact(self, t) -> State:
        g = self.grid
        X, B = self.X, self.B
        v = np.stack([vi(*X, t) for vi in self.case.v])
        return State(g, t, v, self.case.R(*X, t), self.case.w(*B, t), self._w[3](*B, t))


# -- studies -------------------------------------------------------------------


class StudyAborted(RuntimeError):
    """The solver failed on one resolution of a study."""


@dataclass(frozen=True)
class StudyRow:
    n1: int
    n3: int
    h3: float
    dt: float
    err_l2: float
    err_h1: float
    order: float | None


def solution_error(state: State, exact: State) -> tuple[float, float]:
    """Combined L2 and H1 errors of (v, R) in the channel and (w, w_t) on the plate."""
    g = state.grid
    dv, dR = state.v - exact.v, state.R - exact.R
    dw, dwt = state.w - exact.w, state.w_t - exact.w_t
    l2 = (g.integrate(np.sum(dv**2, axis=0)) + g.integrate(dR**2)
          + g.integrate_boundary(dw**2 + dwt**2))
    h1 = (g.sobolev_norm(dv, 1) ** 2 + g.sobolev_norm(dR, 1) ** 2
          + g.sobolev_norm(np.stack([dw, dwt]), 1, "top") ** 2)
    return float(np.sqrt(l2)), float(np.sqrt(h1))


def run_case(case: MmsCase, grid: Grid, dt: float, law: PressureLaw | None = None,
             T: float | None = None) -> tuple[float, float]:
    """Integrate the forced problem to T and return its (L2, H1) error."""
    law = law or PressureLaw()
    T = case.T if T is None else T
    nsteps = max(1, int(round(T / dt)))
    dt = T / nsteps
    forcing = Forcing(case, grid, law)
    solver = Solver(grid, law, forcing=forcing, evolve_fluid=case.evolve_fluid)
    s0 = forcing.exact(0.0)
    state = solver.initial_state(0.0, s0.v, s0.R, s0.w, s0.w_t)
    state = solver.advance(state, dt, nsteps)
    if not (np.all(np.isfinite(state.v)) and np.all(np.isfinite(state.w))):
        raise StudyAborted(f"case {case.name} blew up on {grid}")
    return solution_error(state, forcing.exact(T))


def convergence_study(case: MmsCase, resolutions, dt_rule, law: PressureLaw | None = None,
                      T: float | None = None, csv_path=None) -> list[StudyRow]:
    """Errors over successive resolutions ``(n1, n3)``; ``dt_rule(grid, level) -> dt``.

    The observed order is log2 of the ratio of successive L2 errors, so the
    resolutions should halve the refined step from one level to the next.
    """
    if len(resolutions) < 3:
        raise ValueError("a convergence study needs at least 3 resolutions")
    rows = []
    prev = None
    for level, (n1, n3) in enumerate(resolutions):
        g = Grid(n1, n1, n3)
        dt = dt_rule(g, level)
        l2, h1 = run_case(case, g, dt, law, T)
        order = log2(prev / l2) if prev else None
        rows.append(StudyRow(n1, n3, g.h3, dt, l2, h1, order))
        prev = l2
    if csv_path is not None:
        write_study_csv(rows, csv_path)
    return rows


def write_study_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n1", "n3", "h3", "dt", "err_l2", "err_h1", "order"])
        for r in rows:
            out.writerow([r.n1, r.n3, f"{r.h3:.17g}", f"{r.dt:.17g}", f"{r.err_l2:.17g}",
                          f"{r.err_h1:.17g}", "" if r.order is None else f"{r.order:.6f}"])


def default_study(name: str, levels: int = 3):
    """(resolutions, dt_rule) used by the CLI for each case."""
    if name == "b":
        # temporal study: fixed grid, dt halves
        return [(16, 17)] * levels, lambda g, level: 0.1 / 2**level
    return [(16, 16 * 2**i + 1) for i in range(levels)], lambda g, level: 0.5 * g.h3
