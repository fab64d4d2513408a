"""ALE geometry: harmonic extension of the plate and the map coefficients.

The map is eta(x, t) = (x1, x2, psi(x, t)) with psi the harmonic extension of
1 + w (psi = 0 on the rigid bottom).  Its inverse Jacobian ``a``, cofactor
matrix ``b = J a`` and determinant ``J = d3 psi`` only have a nontrivial third
row, which is what the solver and diagnostics use directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import Grid
from .taylor import linear

# stricter than J > 0; the 1/2 <= J <= 2 range is a separate monitor
DEGENERATE_J = 0.1


class GeometryBreakdown(RuntimeError):
    """The ALE map degenerated (J below the breakdown threshold)."""

    def __init__(self, j_min: float, where):
        self.j_min = j_min
        self.where = where
        super().__init__(f"degenerate ALE map: min J = {j_min:.4g} at node {where}")


_PROFILE_CACHE: dict[Grid, tuple[np.ndarray, np.ndarray]] = {}


def extension_profiles(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode discrete solutions of (D2 - |k|^2) s = 0, s(0) = 0, s(1) = 1.

    Returns ``(S, dS)`` with shape ``(n1, n2//2+1, n3)``; ``dS = D1 S``.
    """
    try:
        return _PROFILE_CACHE[grid]
    except KeyError:
        pass
    n = grid.n3
    kappa, inverse = np.unique(grid.ksq.ravel(), return_inverse=True)
    A = np.broadcast_to(grid.D2, (len(kappa), n, n)).copy()
    A -= kappa[:, None, None] * np.eye(n)
    A[:, 0, :] = 0.0
    A[:, -1, :] = 0.0
    A[:, 0, 0] = 1.0
    A[:, -1, -1] = 1.0
    rhs = np.zeros((len(kappa), n, 1))
    rhs[:, -1, 0] = 1.0
    prof = np.linalg.solve(A, rhs)[..., 0]
    S = prof[inverse].reshape(grid.ksq.shape + (n,))
    dS = S @ grid.D1.T
    _PROFILE_CACHE[grid] = (S, dS)
    return S, dS


def _check_boundary(boundary_value, grid: Grid):
    arr = np.asarray(boundary_value, dtype=float)
    if arr.shape[-2:] != grid.bshape:
        raise ValueError(f"boundary field of shape {arr.shape} does not match {grid}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("boundary value contains non-finite entries")
    return arr


def _extend_spectral(grid: Grid, fh, profile):
    return grid.ifft(fh[..., None] * profile, (-3, -2))


def solve_harmonic_extension(boundary_value, grid: Grid) -> np.ndarray:
    """Discrete harmonic function equal to ``boundary_value`` on x3 = 1, 0 on x3 = 0."""
    arr = _check_boundary(boundary_value, grid)
    S, _ = extension_profiles(grid)
    fh, _ = grid.fft(arr, boundary=True)
    return _extend_spectral(grid, fh, S)


def _height_parts(grid: Grid, w):
    """(ext(w), d1 ext(w), d2 ext(w), d3 ext(w)) from one boundary transform."""
    S, dS = extension_profiles(grid)
    fh, _ = grid.fft(w, boundary=True)
    ik1, ik2 = grid._ik_odd
    return (_extend_spectral(grid, fh, S),
            _extend_spectral(grid, fh * ik1, S),
            _extend_spectral(grid, fh * ik2, S),
            _extend_spectral(grid, fh, dS))


@dataclass(frozen=True, eq=False)
class AleMaps:
    """Geometry bundle of the ALE map on one grid at one time level.

    ``dpsi`` holds (d1 psi, d2 psi, d3 psi); ``J = d3 psi``.  The full 3x3
    matrices ``a`` and ``b`` are assembled on demand; hot paths use the third
    rows ``a3`` and ``b3`` directly.
    """

    grid: Grid
    psi: np.ndarray
    psi_t: np.ndarray
    dpsi: np.ndarray

    @property
    def J(self) -> np.ndarray:
        return self.dpsi[2]

    @cached_property
    def a3(self) -> np.ndarray:
        inv = 1.0 / self.J
        return np.stack([-self.dpsi[0] * inv, -self.dpsi[1] * inv, inv])

    @cached_property
    def b3(self) -> np.ndarray:
        return np.stack([-self.dpsi[0], -self.dpsi[1], np.ones_like(self.J)])

    @cached_property
    def a(self) -> np.ndarray:
        out = np.zeros((3, 3) + self.J.shape)
        out[0, 0] = 1.0
        out[1, 1] = 1.0
        out[2] = self.a3
        return out

    @cached_property
    def b(self) -> np.ndarray:
        out = np.zeros((3, 3) + self.J.shape)
        out[0, 0] = self.J
        out[1, 1] = self.J
        out[2] = self.b3
        return out

    @property
    def nu(self) -> np.ndarray:
        """Moving normal (b31, b32, b33) on the plate boundary."""
        return self.b3[..., -1]

    def grad(self, f, df=None):
        """ALE gradient ``a_ki d_k f`` given the flat gradient ``df``."""
        if df is None:
            df = flat_gradient(self.grid, f)
        d1, d2, d3 = df
        a31, a32, a33 = self.a3
        return np.stack([d1 + a31 * d3, d2 + a32 * d3, a33 * d3])

    def transport_velocity(self, v) -> np.ndarray:
        """Contravariant velocity W_k = (v_i - d_t eta_i) a_ki."""
        a31, a32, a33 = self.a3
        return np.stack([v[0], v[1], a31 * v[0] + a32 * v[1] + a33 * (v[2] - self.psi_t)])


def flat_gradient(grid: Grid, f, transport: bool = False) -> np.ndarray:
    d1, d2 = grid.grad_tangential(f, boundary=False)
    return np.stack([d1, d2, grid.deriv_vertical(f, transport=transport)])


def ale_coefficients(psi, psi_t, grid: Grid) -> AleMaps:
    """Geometry bundle from a height field and its time derivative."""
    psi = np.asarray(psi, dtype=float)
    psi_t = np.asarray(psi_t, dtype=float)
    if psi.shape != grid.shape or psi_t.shape != grid.shape:
        raise ValueError("psi and psi_t must be interior fields on the grid")
    d1, d2 = grid.grad_tangential(psi, boundary=False)
    maps = AleMaps(grid, psi, psi_t, np.stack([d1, d2, grid.deriv_vertical(psi)]))
    check_nondegenerate(maps.J)
    return maps


def check_nondegenerate(J, threshold: float = DEGENERATE_J):
    j_min = float(np.min(J))
    if not np.isfinite(j_min) or j_min < threshold:
        where = np.unravel_index(np.argmin(np.where(np.isfinite(J), J, -np.inf)), J.shape)
        raise GeometryBreakdown(j_min, tuple(int(i) for i in where))


def maps_from_plate(grid: Grid, w, w_t, check: bool = True) -> AleMaps:
    """Geometry from the plate displacement and velocity.

    psi = x3 + ext(w) and psi_t = ext(w_t); the ``x3`` part is added
    analytically so that w = 0 gives the identity map exactly.
    """
    w = _check_boundary(w, grid)
    w_t = _check_boundary(w_t, grid)
    if not (w.any() or w_t.any()):
        psi = np.broadcast_to(grid.x3, grid.shape).copy()
        dpsi = np.zeros((3,) + grid.shape)
        dpsi[2] = 1.0
        return AleMaps(grid, psi, np.zeros(grid.shape), dpsi)
    S, dS = extension_profiles(grid)
    ik1, ik2 = grid._ik_odd
    wh, _ = grid.fft(np.stack([w, w_t]), boundary=True)
    spec = np.stack([wh[0, ..., None] * S, wh[1, ..., None] * S,
                     (wh[0] * ik1)[..., None] * S, (wh[0] * ik2)[..., None] * S,
                     wh[0, ..., None] * dS])
    e, psi_t, e1, e2, e3 = grid.ifft(spec, (-3, -2))
    maps = AleMaps(grid, grid.x3 + e, psi_t, np.stack([e1, e2, 1.0 + e3]))
    if check:
        check_nondegenerate(maps.J)
    return maps


def height_series(grid: Grid, w):
    """psi and its flat derivatives for a plate field that may be a Series."""
    S, dS = extension_profiles(grid)
    ik1, ik2 = grid._ik_odd

    def ext(mult, prof):
        def fn(c):
            fh, _ = grid.fft(c, boundary=True)
            return _extend_spectral(grid, fh * mult, prof)
        return fn

    one = np.ones(grid.ksq.shape)
    psi = linear(ext(one, S), w) + grid.x3
    d1 = linear(ext(ik1, S), w)
    d2 = linear(ext(ik2, S), w)
    d3 = linear(ext(one, dS), w) + 1.0
    return psi, d1, d2, d3


def elliptic_ratio_probe(w_samples, s: float, grid: Grid) -> list[float]:
    """Measured ratios ||ext(w)||_{H^(s+1/2)} / ||w||_{H^s(top)}.

    ``ext(w)`` is the part of the height linear in the plate displacement
    (psi - x3).  Identically zero samples are skipped.
    """
    if not 0 <= s <= 5:
        raise ValueError("s must lie in [0, 5]")
    ratios = []
    for w in w_samples:
        den = grid.sobolev_norm(w, s, "top")
        if den == 0.0:
            continue
        num = grid.sobolev_norm(solve_harmonic_extension(w, grid), s + 0.5)
        ratios.append(num / den)
    return ratios


def piola_residual(b, grid: Grid) -> np.ndarray:
    """sum_k D_k b_ki for i = 1, 2, 3 (shape (3, n1, n2, n3))."""
    out = []
    for i in range(3):
        d1 = grid.deriv_tangential(b[0, i], 1, boundary=False)
        d2 = grid.deriv_tangential(b[1, i], 2, boundary=False)
        d3 = grid.deriv_vertical(b[2, i])
        out.append(d1 + d2 + d3)
    return np.stack(out)
