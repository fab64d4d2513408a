"""Truncated Taylor series in time with array-valued coefficients.

``Series(c)`` represents ``sum_n c[n] t^n`` (normalized coefficients, so that
the n-th time derivative at t = 0 is ``n! * c[n]``).  Arithmetic follows the
Cauchy product rules, which lets the same right-hand-side code that advances
the solver also produce the exact time-derivative cascade of the equations.
"""

from __future__ import annotations

import numpy as np


class Series:
    __array_ufunc__ = None  # make ndarray op Series defer to Series

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @classmethod
    def constant(cls, value, order: int) -> "Series":
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        return cls(c)

    @classmethod
    def stack(cls, items) -> "Series":
        return cls(np.stack([s.c for s in items], axis=1))

    def __getitem__(self, i) -> "Series":
        i = i if isinstance(i, tuple) else (i,)
        return Series(self.c[(slice(None),) + i])

    def map(self, fn) -> "Series":
        """Apply a linear, time-independent operator coefficientwise."""
        return Series(fn(self.c))

    def derivative(self) -> "Series":
        """Time derivative (order drops by one)."""
        n = np.arange(1, self.order + 1).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Series(self.c[1:] * n)

    def _coerce(self, other) -> "Series":
        if isinstance(other, Series):
            return other
        other = np.asarray(other, dtype=float)
        c = np.zeros((self.order + 1,) + np.broadcast_shapes(other.shape, self.c.shape[1:]))
        c[0] = other
        return Series(c)

    def __neg__(self):
        return Series(-self.c)

    def __add__(self, other):
        if isinstance(other, Series):
            return Series(self.c + other.c)
        c = self.c.copy() + 0.0 * np.asarray(other)
        c[0] = self.c[0] + other
        return Series(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Series):
            return Series(self.c * np.asarray(other, dtype=float))
        a, b = self.c, other.c
        out = np.zeros((self.order + 1,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]))
        for n in range(self.order + 1):
            for j in range(n + 1):
                out[n] += a[j] * b[n - j]
        return Series(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Series":
        a = self.c
        h = np.zeros_like(a)
        h[0] = 1.0 / a[0]
        for n in range(1, self.order + 1):
            acc = np.zeros_like(a[0])
            for j in range(1, n + 1):
                acc += a[j] * h[n - j]
            h[n] = -acc * h[0]
        return Series(h)

    def __truediv__(self, other):
        if not isinstance(other, Series):
            return Series(self.c / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, alpha: float) -> "Series":
        # n f0 p_n = sum_{j=1}^n (alpha j - (n - j)) f_j p_{n-j}
        f = self.c
        p = np.zeros_like(f)
        p[0] = f[0] ** alpha
        for n in range(1, self.order + 1):
            acc = np.zeros_like(f[0])
            for j in range(1, n + 1):
                acc += (alpha * j - (n - j)) * f[j] * p[n - j]
            p[n] = acc / (n * f[0])
        return Series(p)

    def log(self) -> "Series":
        # (log f)' = f'/f
        f = self.c
        out = np.zeros_like(f)
        out[0] = np.log(f[0])
        for n in range(1, self.order + 1):
            acc = n * f[n]
            for j in range(1, n):
                acc = acc - j * out[j] * f[n - j]
            out[n] = acc / (n * f[0])
        return Series(out)

    def truncate(self, order: int) -> "Series":
        return Series(self.c[: order + 1])

    def pad(self, order: int) -> "Series":
        if order <= self.order:
            return self.truncate(order)
        c = np.zeros((order + 1,) + self.c.shape[1:])
        c[: self.order + 1] = self.c
        return Series(c)

    def derivatives(self) -> np.ndarray:
        """Time derivatives at t = 0: ``n! * c[n]``."""
        fact = np.cumprod(np.r_[1.0, np.arange(1, self.order + 1)])
        return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))


def linear(fn, f):
    """Apply a linear spatial operator to an ndarray or a :class:`Series`."""
    if isinstance(f, Series):
        return f.map(fn)
    return fn(f)


def stack(items):
    if isinstance(items[0], Series):
        return Series.stack([i if isinstance(i, Series) else items[0]._coerce(i) for i in items])
    return np.stack(items)
