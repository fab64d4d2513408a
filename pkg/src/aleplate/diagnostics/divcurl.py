"""Velocity recovery from divergence, curl, normal traces and mean modes.

The flat problem Lap v = grad d - curl c is solved per tangential Fourier mode
by a vertical two-point solve: v3 takes its traces as Dirichlet data, and v1,
v2 take the Neumann data that the curl fixes on the walls,

    d3 v1 = c2 + d1 v3,    d3 v2 = d2 v3 - c1.

The zero mode of v1, v2 is pinned by its vertical mean.  With ALE data
(d = div_a v, c = curl_a v) the difference between the ALE and flat operators
shows up as reconstruction error of size ||a - I|| ||v||_{H^1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import flat_gradient
from ..grid import Grid
from .identities import ale_curl, ale_divergence

A_CLOSE_TO_I = 0.1


class ReconstructionContractError(ValueError):
    """||a - I||_{H^2} is too large for the flat reconstruction."""


@dataclass(frozen=True)
class DivCurlResult:
    v_hat: np.ndarray
    error_l2: float
    error_h1: float
    v_h1: float
    a_minus_I_h2: float

    @property
    def relative_l2(self) -> float:
        """error_l2 / ||v||_{H^1}."""
        return self.error_l2 / self.v_h1 if self.v_h1 else 0.0


def a_minus_identity_h2(maps) -> float:
    """H^2 norm of a - I; only the third row of a differs from I."""
    dev = maps.a3.copy()
    dev[2] -= 1.0
    return maps.grid.sobolev_norm(dev, 2)


def _operators(grid: Grid):
    """Dirichlet and Neumann matrices of D2 - |k|^2 for every distinct |k|^2."""
    n = grid.n3
    kappa, inverse = np.unique(grid.ksq.ravel(), return_inverse=True)
    base = np.broadcast_to(grid.D2, (len(kappa), n, n)) - kappa[:, None, None] * np.eye(n)
    dirichlet = base.copy()
    dirichlet[:, [0, -1], :] = 0.0
    dirichlet[:, 0, 0] = 1.0
    dirichlet[:, -1, -1] = 1.0
    neumann = base.copy()
    neumann[:, 0, :] = grid.D1[0]
    neumann[:, -1, :] = grid.D1[-1]
    return kappa, inverse.reshape(grid.ksq.shape), dirichlet, neumann


def _solve_modes(grid: Grid, mats, kappa, inverse, rhs, mean=None):
    """Solve mats[inverse] x = rhs mode by mode; rhs has shape (n1, n2h, n3)."""
    out = np.zeros_like(rhs)
    for j, kap in enumerate(kappa):
        sel = inverse == j
        b = rhs[sel].T
        if kap == 0.0 and mean is not None:
            A = np.vstack([mats[j], grid.w3])
            b = np.vstack([b, mean[sel][None, :]])
            out[sel] = np.linalg.lstsq(A, b, rcond=None)[0].T
        else:
            out[sel] = np.linalg.solve(mats[j], b).T
    return out


def reconstruct(grid: Grid, div, curl, v3_bottom, v3_top, mean_h) -> np.ndarray:
    """Flat div-curl solve.

    ``mean_h`` holds the rfft2 zero mode's vertical integral for v1, v2
    (shape (2,)); all other inputs are physical fields.
    """
    ik1, ik2 = grid._ik_odd
    dd = flat_gradient(grid, div)
    dc = [flat_gradient(grid, curl[i]) for i in range(3)]
    # Lap v = grad d - curl c
    curl_c = np.stack([dc[2][1] - dc[1][2], dc[0][2] - dc[2][0], dc[1][0] - dc[0][1]])
    rhs = dd - curl_c
    rh, axes = grid.fft(rhs, boundary=False)
    bot = grid.fft(np.asarray(v3_bottom, dtype=float), boundary=True)[0]
    top = grid.fft(np.asarray(v3_top, dtype=float), boundary=True)[0]
    ch = grid.fft(curl, boundary=False)[0]

    kappa, inverse, dirichlet, neumann = _operators(grid)
    r3 = rh[2].copy()
    r3[..., 0], r3[..., -1] = bot, top
    v3h = _solve_modes(grid, dirichlet, kappa, inverse, r3)
    r1 = rh[0].copy()
    r2 = rh[1].copy()
    for end in (0, -1):
        r1[..., end] = ch[1][..., end] + ik1 * v3h[..., end]
        r2[..., end] = ik2 * v3h[..., end] - ch[0][..., end]
    zero = np.zeros(grid.ksq.shape, dtype=complex)
    m1, m2 = zero.copy(), zero.copy()
    m1[0, 0], m2[0, 0] = mean_h
    v1h = _solve_modes(grid, neumann, kappa, inverse, r1, m1)
    v2h = _solve_modes(grid, neumann, kappa, inverse, r2, m2)
    return grid.ifft(np.stack([v1h, v2h, v3h]), axes)


def divcurl_reconstruct(state, metric: str = "ale") -> DivCurlResult:
    """Rebuild the velocity of ``state`` and report ||v - v_hat|| in L2 and H1.

    ``metric="ale"`` feeds div_a v and curl_a v into the flat solve (the
    a != I discrepancy is part of the error); ``metric="flat"`` uses the flat
    operators, leaving only discretization error.
    """
    g = state.grid
    maps = state.maps
    dev = a_minus_identity_h2(maps)
    if dev > A_CLOSE_TO_I:
        raise ReconstructionContractError(
            f"||a - I||_H2 = {dev:.3g} exceeds {A_CLOSE_TO_I}; flat reconstruction void")
    v = state.v
    dv = np.stack([flat_gradient(g, v[i]) for i in range(3)], axis=1)  # dv[k, i]
    if metric == "ale":
        a = maps.a
    elif metric == "flat":
        a = np.broadcast_to(np.eye(3)[:, :, None, None, None], (3, 3) + g.shape)
    else:
        raise ValueError("metric must be 'ale' or 'flat'")
    div = ale_divergence(a, dv)
    curl = ale_curl(a, dv)
    vh0 = grid_zero_mode(g, v[:2])
    v_hat = reconstruct(g, div, curl, v[2, ..., 0], v[2, ..., -1], vh0)
    err = v - v_hat
    return DivCurlResult(v_hat,
                         float(np.sqrt(g.integrate(np.sum(err**2, axis=0)))),
                         g.sobolev_norm(err, 1), g.sobolev_norm(v, 1), dev)


def grid_zero_mode(grid: Grid, f) -> np.ndarray:
    """Vertical integral of the rfft2 zero mode of each component of ``f``."""
    fh = grid.fft(f, boundary=False)[0]
    return fh[..., 0, 0, :] @ grid.w3
