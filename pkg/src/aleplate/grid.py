"""Discretization of the periodic channel T^2 x [0, 1].

Tangential directions use Fourier collocation with period 2*pi.  The vertical
direction uses a uniform grid with 4th-order centered finite differences for
geometry and diagnostics, and a summation-by-parts first derivative for the
explicit transport terms.

Array conventions: an interior field has trailing axes ``(n1, n2, n3)``; a
boundary field (a function on one of the tori x3 = 0 or x3 = 1) has trailing
axes ``(n1, n2)``.  Any number of leading axes (vector components, Taylor
coefficients, ...) is allowed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cache, cached_property

import numpy as np
from scipy.integrate import simpson

TORUS_AREA = 4.0 * np.pi**2


def fornberg_weights(x0: float, x: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0``.

    Fornberg's recursion; exact for polynomials of degree ``len(x) - 1``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, order + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def fd_matrix(x: np.ndarray, order: int, width: int, closure_width: int,
              closure_rows: int) -> np.ndarray:
    """Dense FD matrix: centered ``width``-point interior stencil, one-sided
    ``closure_width``-point stencils on the first/last ``closure_rows`` rows."""
    n = len(x)
    half = width // 2
    rows = max(closure_rows, half)
    m = np.zeros((n, n))
    for i in range(n):
        if i < rows:
            idx = np.arange(0, closure_width)
        elif i >= n - rows:
            idx = np.arange(n - closure_width, n)
        else:
            idx = np.arange(i - half, i + half + 1)
        m[i, idx] = fornberg_weights(x[i], x[idx], order)
    return m


# Diagonal norm (in units of h) of the classical summation-by-parts first
# derivative with a 6th-order interior stencil and 3rd-order boundary rows.
SBP_NORM = np.array([13649 / 43200, 12013 / 8640, 2711 / 4320,
                     5359 / 4320, 7877 / 8640, 43801 / 43200])
_SBP_STENCIL = {-3: -1 / 60, -2: 3 / 20, -1: -3 / 4, 1: 3 / 4, 2: -3 / 20, 3: 1 / 60}
_SBP_D01 = 104009 / 54596  # fixes the one free parameter of the family


@cache
def _sbp_boundary_block() -> np.ndarray:
    """The 6 x 9 boundary block of the SBP derivative (grid spacing 1).

    Solves H D = Q with Q + Q^T = diag(-1, 0, ..., 0, 1) and exactness on
    cubics; the remaining free parameter is pinned through D[0, 1].
    """
    nb, width = len(SBP_NORM), 9
    q0 = np.zeros((nb, width))
    q0[0, 0] = -0.5
    for i in range(nb, width):
        for off, c in _SBP_STENCIL.items():
            if i + off < nb:
                q0[i + off, i] = -c
    basis = []
    for i in range(nb):
        for j in range(i + 1, nb):
            e = np.zeros((nb, width))
            e[i, j], e[j, i] = 1.0, -1.0
            basis.append(e)
    x = np.arange(width, dtype=float)
    rows, rhs = [], []
    for p in range(4):
        xp = x**p
        deriv = p * x[:nb] ** (p - 1) if p else np.zeros(nb)
        rows.append(np.stack([e @ xp for e in basis], axis=1))
        rhs.append(SBP_NORM * deriv - q0 @ xp)
    rows.append(np.array([[e[0, 1] for e in basis]]))
    rhs.append(np.array([SBP_NORM[0] * _SBP_D01 - q0[0, 1]]))
    a, b = np.vstack(rows), np.concatenate(rhs)
    coef = np.linalg.lstsq(a, b, rcond=None)[0]
    coef += np.linalg.lstsq(a, b - a @ coef, rcond=None)[0]  # one refinement sweep
    if np.abs(a @ coef - b).max() > 1e-12:
        raise RuntimeError("SBP boundary conditions are inconsistent")
    q = q0 + np.tensordot(coef, np.array(basis), axes=1)
    return q / SBP_NORM[:, None]


def sbp_first_derivative(n: int, h: float) -> np.ndarray:
    """Diagonal-norm SBP first derivative on ``n`` uniform nodes."""
    block = _sbp_boundary_block()
    nb, width = block.shape
    if n < 2 * nb:
        raise ValueError(f"SBP derivative needs at least {2 * nb} nodes, got {n}")
    d = np.zeros((n, n))
    for i in range(nb, n - nb):
        for off, c in _SBP_STENCIL.items():
            d[i, i + off] = c
    d[:nb, :width] = block
    d[n - nb:, n - width:] = -block[::-1, ::-1]
    return d / h


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid: ``n1 x n2`` Fourier modes, ``n3`` vertical nodes."""

    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        for name in ("n1", "n2"):
            n = getattr(self, name)
            if n < 4 or n % 2:
                raise ValueError(f"{name} must be even and >= 4, got {n}")
        if self.n3 < 13:
            # the SBP boundary blocks (6 rows each) must not overlap
            raise ValueError(f"n3 must be >= 13, got {self.n3}")

    # -- coordinates -------------------------------------------------------

    @cached_property
    def x1(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n1) / self.n1

    @cached_property
    def x2(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n2) / self.n2

    @cached_property
    def x3(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n3)

    @property
    def h3(self) -> float:
        return 1.0 / (self.n3 - 1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def bshape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    def mesh(self):
        """Broadcastable coordinate arrays ``X1, X2, X3`` for interior fields."""
        return (self.x1[:, None, None], self.x2[None, :, None],
                self.x3[None, None, :])

    def bmesh(self):
        return self.x1[:, None], self.x2[None, :]

    def zeros(self, *lead: int) -> np.ndarray:
        return np.zeros(lead + self.shape)

    def bzeros(self, *lead: int) -> np.ndarray:
        return np.zeros(lead + self.bshape)

    # -- wavenumbers -------------------------------------------------------

    @cached_property
    def k1(self) -> np.ndarray:
        """Wavenumbers along x1, shaped for the ``rfft2`` half-spectrum."""
        return (np.fft.fftfreq(self.n1, 1.0 / self.n1))[:, None]

    @cached_property
    def k2(self) -> np.ndarray:
        return (np.fft.rfftfreq(self.n2, 1.0 / self.n2))[None, :]

    @cached_property
    def ksq(self) -> np.ndarray:
        return self.k1**2 + self.k2**2

    @cached_property
    def _ik_odd(self):
        # Nyquist modes of odd-order derivatives are set to zero
        k1 = self.k1.copy()
        k2 = self.k2.copy()
        k1[self.n1 // 2] = 0.0
        k2[..., self.n2 // 2] = 0.0
        return 1j * k1, 1j * k2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask on the rfft2 half-spectrum."""
        c1 = self.n1 // 3
        c2 = self.n2 // 3
        return ((np.abs(self.k1) <= c1) & (np.abs(self.k2) <= c2)).astype(float)

    # -- vertical operators ------------------------------------------------

    @cached_property
    def D1(self) -> np.ndarray:
        """First derivative: 5-point centered, 6-point 4th-order closures."""
        return fd_matrix(self.x3, 1, 5, 6, 2)

    @cached_property
    def D2(self) -> np.ndarray:
        """Second derivative: 5-point centered, 6-point 4th-order closures."""
        return fd_matrix(self.x3, 2, 5, 6, 2)

    @cached_property
    def D1_transport(self) -> np.ndarray:
        """First derivative used by the explicit stepper.

        A diagonal-norm summation-by-parts operator.  Ad hoc one-sided
        closures make the wall-bounded acoustic system unstable or strongly
        non-normal; with SBP and pointwise wall conditions the discrete
        acoustic energy is conserved.
        """
        return sbp_first_derivative(self.n3, self.h3)

    @cached_property
    def sbp_weights(self) -> np.ndarray:
        """Quadrature weights of the SBP norm."""
        w = np.full(self.n3, self.h3)
        nb = len(SBP_NORM)
        w[:nb] *= SBP_NORM
        w[-nb:] *= SBP_NORM[::-1]
        return w

    @cached_property
    def w3(self) -> np.ndarray:
        """Composite Simpson weights on the vertical nodes."""
        return simpson(np.eye(self.n3), x=self.x3, axis=1)

    @property
    def cell_area(self) -> float:
        return TORUS_AREA / (self.n1 * self.n2)

    # -- transforms --------------------------------------------------------

    def _axes(self, f: np.ndarray, boundary: bool | None):
        if boundary is None:
            boundary = tuple(f.shape[-3:]) != self.shape
            if boundary and tuple(f.shape[-2:]) != self.bshape:
                raise ValueError(f"array of shape {f.shape} does not live on {self}")
        return (-2, -1) if boundary else (-3, -2)

    def fft(self, f, boundary=None):
        axes = self._axes(f, boundary)
        return np.fft.rfft2(f, axes=axes), axes

    def ifft(self, fh, axes):
        return np.fft.irfft2(fh, s=(self.n1, self.n2), axes=axes)

    def _spec(self, fh, axes, mult):
        """Multiply a half-spectrum by a (n1, n2//2+1) multiplier."""
        if axes == (-3, -2):
            mult = mult[..., None]
        return fh * mult

    # -- derivatives -------------------------------------------------------
    #
    # Tangential operators are Fourier multipliers.  At desk resolutions it
    # is much cheaper to apply them as dense 1D matrices through BLAS than to
    # transform 3D fields, so each multiplier is tabulated once per grid.

    def _multiplier_matrix(self, n: int, mult: np.ndarray) -> np.ndarray:
        """Real n x n matrix of the 1D Fourier multiplier ``mult`` (fft order)."""
        m = np.fft.ifft(mult[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0)
        return np.ascontiguousarray(m.real)

    @cache
    def tangential_matrix(self, direction: int, order: int) -> np.ndarray:
        """Dense matrix of d^order/dx_direction^order on one periodic line.

        Odd orders drop the Nyquist mode, matching the half-spectrum rules.
        """
        if direction not in (1, 2):
            raise ValueError("direction must be 1 or 2")
        if order < 0:
            raise ValueError("order must be >= 0")
        n = self.n1 if direction == 1 else self.n2
        k = np.fft.fftfreq(n, 1.0 / n)
        if order % 2:
            k[n // 2] = 0.0
        return self._multiplier_matrix(n, (1j * k) ** order)

    @cached_property
    def _dealias_matrices(self):
        out = []
        for n in (self.n1, self.n2):
            k = np.fft.fftfreq(n, 1.0 / n)
            out.append(self._multiplier_matrix(n, (np.abs(k) <= n // 3).astype(complex)))
        return tuple(out)

    def _along(self, f, m: np.ndarray, direction: int, boundary: bool | None):
        """Apply an ``n x n`` matrix along tangential axis ``direction``."""
        f = np.asarray(f, dtype=float)
        axes = self._axes(f, boundary)
        axis = axes[direction - 1]
        if axis == -1:
            return f @ m.T
        if axis == -2:
            return np.matmul(m, f)
        lead = f.shape[:-3]
        flat = np.ascontiguousarray(f).reshape(lead + (self.n1, -1))
        return np.matmul(m, flat).reshape(f.shape)

    def deriv_tangential(self, f, direction: int, order: int = 1,
                         boundary: bool | None = None) -> np.ndarray:
        """Spectral derivative ``d^order/dx_direction^order`` (direction 1 or 2)."""
        if order < 1:
            raise ValueError("order must be >= 1")
        return self._along(f, self.tangential_matrix(direction, order), direction, boundary)

    def grad_tangential(self, f, boundary: bool | None = None):
        return (self.deriv_tangential(f, 1, boundary=boundary),
                self.deriv_tangential(f, 2, boundary=boundary))

    def laplacian_tangential(self, f, boundary: bool | None = None):
        return (self.deriv_tangential(f, 1, 2, boundary)
                + self.deriv_tangential(f, 2, 2, boundary))

    def deriv_vertical(self, f, order: int = 1, transport: bool = False):
        """Finite-difference derivative along x3 (4th order)."""
        if order == 1:
            m = self.D1_transport if transport else self.D1
        elif order == 2:
            m = self.D2
        else:
            raise ValueError("vertical derivative order must be 1 or 2")
        return f @ m.T

    def dealias(self, f, boundary: bool | None = None):
        """2/3-rule projection (the mask is a tensor product of 1D masks)."""
        p1, p2 = self._dealias_matrices
        return self._along(self._along(f, p1, 1, boundary), p2, 2, boundary)

    # -- restrictions ------------------------------------------------------

    def trace(self, f, boundary: int) -> np.ndarray:
        """Restriction to x3 = 0 (``boundary=0``) or x3 = 1 (``boundary=1``)."""
        if boundary == 0:
            return f[..., 0]
        if boundary == 1:
            return f[..., -1]
        raise ValueError("boundary must be 0 or 1")

    def cutoff(self, which: str) -> np.ndarray:
        """Smooth profile of x3: 1 near the named boundary, 0 beyond x3 = 1/2."""
        return cutoff_profile(self.x3, which)

    # -- integrals and norms -----------------------------------------------

    def integrate(self, f) -> np.ndarray | float:
        """Integral over the channel (trailing three axes)."""
        return self.cell_area * np.sum(f @ self.w3, axis=(-2, -1))

    def integrate_boundary(self, f) -> np.ndarray | float:
        return self.cell_area * np.sum(f, axis=(-2, -1))

    def sobolev_norm(self, f, s: float, region: str = "interior") -> float:
        """H^s norm of ``f`` on the channel or on one boundary torus.

        Boundary norms use the multiplier (1 + |k|^2)^(s/2).  Interior norms use
        the anisotropic equivalent norm
        ``sum_j || (1 + |k|^2)^((s - j)/2) d3^j f ||^2`` over ``j = 0..floor(s)``.
        Leading axes of ``f`` are summed as vector components.
        """
        if s < 0:
            raise ValueError("s must be nonnegative")
        f = np.asarray(f, dtype=float)
        if region == "interior":
            if s > 6:
                raise ValueError(f"interior norms support s <= 6, got {s}")
            g = np.fft.fft2(f, axes=(-3, -2))
            weight = 1.0 + self._ksq_full
            norm2 = 0.0
            for j in range(int(np.floor(s)) + 1):
                if j:
                    g = g @ self.D1.T
                norm2 += np.sum(weight ** (s - j) * ((np.abs(g) ** 2) @ self.w3))
            norm2 *= self.cell_area / (self.n1 * self.n2)
        elif region in ("top", "bottom", "boundary"):
            if s > 8:
                raise ValueError(f"boundary norms support s <= 8, got {s}")
            fh = np.fft.fft2(f, axes=(-2, -1))
            norm2 = np.sum((1.0 + self._ksq_full) ** s * np.abs(fh) ** 2)
            norm2 *= self.cell_area / (self.n1 * self.n2)
        else:
            raise ValueError(f"unknown region {region!r}")
        return float(np.sqrt(norm2))

    @cached_property
    def _ksq_full(self) -> np.ndarray:
        k1 = np.fft.fftfreq(self.n1, 1.0 / self.n1)[:, None]
        k2 = np.fft.fftfreq(self.n2, 1.0 / self.n2)[None, :]
        return k1**2 + k2**2


def _smooth_step(t):
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def cutoff_profile(x3, which: str):
    """C-infinity cut-off: equals 1 for x3 >= 0.9 (top) and 0 for x3 <= 1/2."""
    x3 = np.asarray(x3, dtype=float)
    if which == "top":
        return _smooth_step((x3 - 0.5) / 0.4)
    if which == "bottom":
        return _smooth_step((0.5 - x3) / 0.4)
    raise ValueError("which must be 'top' or 'bottom'")
