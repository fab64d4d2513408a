"""Runtime range checks and the a priori norm table."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import height_series
from ..grid import Grid
from ..pressure import PressureLaw
from ..taylor import Series
from .divcurl import A_CLOSE_TO_I, a_minus_identity_h2
from .identities import tangency_residual

J_RANGE = (0.5, 2.0)
KINEMATIC_TOL = 1e-10
BLOWUP_NORM = 1e6
NORM_GROWTH = 10.0


@dataclass(frozen=True)
class MonitorReport:
    t: float
    J_min: float
    J_max: float
    R_min: float
    R_max: float
    qprime_min: float
    qprime_max: float
    a_minus_I_H2: float
    kinematic_residual: float
    tangency_bottom: float
    tangency_top: float
    bounds: dict[str, tuple[float, float]]
    J_bad_nodes: np.ndarray
    norms: dict[str, float] = field(default_factory=dict)

    def values(self) -> dict[str, float]:
        return {"J_min": self.J_min, "J_max": self.J_max, "R_min": self.R_min,
                "R_max": self.R_max, "qprime_min": self.qprime_min,
                "qprime_max": self.qprime_max, "a_minus_I_H2": self.a_minus_I_H2,
                "kinematic_residual": self.kinematic_residual,
                "tangency_bottom": self.tangency_bottom, "tangency_top": self.tangency_top}

    @property
    def tripped(self) -> list[str]:
        """Names of the monitors outside their bounds, in a fixed order."""
        b = self.bounds
        out = []
        if not (b["J"][0] <= self.J_min and self.J_max <= b["J"][1]):
            out.append("J")
        if not (b["R"][0] <= self.R_min and self.R_max <= b["R"][1]):
            out.append("R")
        if not (b["qprime"][0] <= self.qprime_min and self.qprime_max <= b["qprime"][1]):
            out.append("qprime")
        if not self.a_minus_I_H2 <= b["a_minus_I"][1]:
            out.append("a_minus_I")
        if not self.kinematic_residual <= b["kinematic"][1]:
            out.append("kinematic")
        return out

    @property
    def green(self) -> bool:
        return not self.tripped

    @property
    def blowup(self) -> bool:
        vals = list(self.values().values()) + list(self.norms.values())
        return any(not np.isfinite(x) or abs(x) > BLOWUP_NORM for x in vals)


def monitor(state, law: PressureLaw | None = None, window=None,
            a_tol: float = A_CLOSE_TO_I, kinematic_tol: float = KINEMATIC_TOL) -> MonitorReport:
    """Range checks at one state; the norm table is added when a window is given."""
    law = law or PressureLaw()
    maps = state.maps
    J, R = maps.J, state.R
    qp = law.dq(R)
    lo, hi = law.admissible
    bounds = {"J": J_RANGE, "R": (lo, hi), "qprime": (law.c1, law.c2),
              "a_minus_I": (0.0, a_tol), "kinematic": (0.0, kinematic_tol)}
    bad = np.argwhere((J < J_RANGE[0]) | (J > J_RANGE[1]))
    norms = window_norm_table(window) if window is not None else {}
    return MonitorReport(state.t, float(J.min()), float(J.max()), float(R.min()),
                         float(R.max()), float(qp.min()), float(qp.max()),
                         a_minus_identity_h2(maps), state.kinematic_residual(),
                         *tangency_residual(state), bounds, bad, norms)


# -- the a priori norm table ----------------------------------------------------

FLUID_ORDERS = 4   # d_t^j v, d_t^j R in H^(3-j), j = 0..3
PLATE_ORDERS = 5   # d_t^j w in H^(5-j) on the plate, j = 0..4
GEOMETRY_ORDERS = 4


def norm_table(grid: Grid, v: Series, R: Series, w: Series) -> dict[str, float]:
    """Norms of the a priori estimate from Taylor series in time.

    ``v`` and ``R`` need order >= 3 and ``w`` order >= 4.  Keys read
    ``dt{j}{field}_H{s}``: d_t^j v, d_t^j R in H^(3-j), d_t^j w in H^(5-j) of
    the plate, d_t^j psi in H^(5.5-j), d_t^j a and d_t^j b in H^(4.5-j).
    """
    out = {}
    vd, Rd, wd = v.derivatives(), R.derivatives(), w.derivatives()
    for j in range(FLUID_ORDERS):
        out[f"dt{j}v_H{3 - j}"] = grid.sobolev_norm(vd[j], 3 - j)
    for j in range(FLUID_ORDERS):
        out[f"dt{j}R_H{3 - j}"] = grid.sobolev_norm(Rd[j], 3 - j)
    for j in range(PLATE_ORDERS):
        out[f"dt{j}w_H{5 - j}"] = grid.sobolev_norm(wd[j], 5 - j, "top")

    wg = w.truncate(GEOMETRY_ORDERS - 1)
    psi, d1, d2, d3 = height_series(grid, wg)
    inv = d3.reciprocal()
    psi_d = psi.derivatives()
    a3 = [(-1.0 * d1 * inv).derivatives(), (-1.0 * d2 * inv).derivatives(), inv.derivatives()]
    b3 = [(-1.0 * d1).derivatives(), (-1.0 * d2).derivatives()]
    Jd = d3.derivatives()
    for j in range(GEOMETRY_ORDERS):
        ident = 1.0 if j == 0 else 0.0
        a = np.zeros((3, 3) + grid.shape)
        a[0, 0] = a[1, 1] = ident
        a[2, 0], a[2, 1], a[2, 2] = a3[0][j], a3[1][j], a3[2][j]
        b = np.zeros((3, 3) + grid.shape)
        b[0, 0] = b[1, 1] = Jd[j]
        b[2, 0], b[2, 1], b[2, 2] = b3[0][j], b3[1][j], ident
        s = 4.5 - j
        out[f"dt{j}psi_H{5.5 - j:g}"] = grid.sobolev_norm(psi_d[j], 5.5 - j)
        out[f"dt{j}a_H{s:g}"] = grid.sobolev_norm(a, s)
        out[f"dt{j}b_H{s:g}"] = grid.sobolev_norm(b, s)
    return out


def window_norm_table(window) -> dict[str, float]:
    return norm_table(window.grid, window.series(lambda s: s.v, FLUID_ORDERS - 1),
                      window.series(lambda s: s.R, FLUID_ORDERS - 1),
                      window.series(lambda s: s.w, PLATE_ORDERS - 1))


def jet_norm_table(jet) -> dict[str, float]:
    """The same table at t = 0 from the compatible initial jet."""
    def series(derivs, order):
        fact = np.cumprod(np.r_[1.0, np.arange(1, order + 1)])
        d = np.asarray(derivs[: order + 1])
        return Series(d / fact.reshape((-1,) + (1,) * (d.ndim - 1)))

    return norm_table(jet.grid, series(jet.v_jet, FLUID_ORDERS - 1),
                      series(jet.R_jet, FLUID_ORDERS - 1),
                      series(jet.w_jet, PLATE_ORDERS - 1))


def perturbation_scale(jet) -> float:
    """Largest initial fluid norm of the perturbation (R measured from Rbar)."""
    g = jet.grid
    scale = 0.0
    for j in range(FLUID_ORDERS):
        R = jet.R_jet[j] - (jet.law.rbar if j == 0 else 0.0)
        scale = max(scale, g.sobolev_norm(jet.v_jet[j], 3 - j), g.sobolev_norm(R, 3 - j))
    return scale


def norm_bounds(initial: dict[str, float], scale: float,
                growth: float = NORM_GROWTH) -> dict[str, float]:
    """growth * max(initial norm, perturbation scale) for every table entry.

    Entries that start at zero (plate and geometry derivatives of data with a
    flat plate at rest) are bounded relative to the size of the perturbation
    that drives them.
    """
    return {k: growth * max(v, scale) for k, v in initial.items()}
