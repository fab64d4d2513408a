"""Sliding window of equally spaced states supplying time derivatives."""

from __future__ import annotations

from collections import deque

import numpy as np

from ..grid import fornberg_weights
from ..pressure import PressureLaw
from ..taylor import Series

DEFAULT_LENGTH = 9


class WindowNotReady(RuntimeError):
    """The window holds fewer states than it needs."""


class JetWindow:
    """Ring buffer of ``length`` consecutive states at a uniform step.

    Derivatives are evaluated at the centre state with centered
    finite-difference weights over the whole buffer (order ``length - 1`` for
    first and second derivatives).
    """

    def __init__(self, law: PressureLaw | None = None, length: int = DEFAULT_LENGTH):
        if length < 3 or length % 2 == 0:
            raise ValueError("window length must be odd and at least 3")
        self.law = law or PressureLaw()
        self.length = length
        self.states: deque = deque(maxlen=length)
        self._weights: dict[tuple[int, float], np.ndarray] = {}

    def push(self, state) -> None:
        if self.states:
            last = self.states[-1]
            if last.grid is not state.grid and last.grid != state.grid:
                raise ValueError("window states must share one grid")
            if len(self.states) >= 2:
                dt0 = self.states[1].t - self.states[0].t
                if not np.isclose(state.t - last.t, dt0, rtol=1e-9, atol=1e-14):
                    raise ValueError("window states must be equally spaced in time")
            elif state.t <= last.t:
                raise ValueError("window states must advance in time")
        self.states.append(state)

    @property
    def full(self) -> bool:
        return len(self.states) == self.length

    @property
    def max_order(self) -> int:
        return self.length - 1

    def _require(self, order: int = 0):
        if not self.full:
            raise WindowNotReady(f"window holds {len(self.states)} of {self.length} states")
        if order > self.max_order:
            raise WindowNotReady(f"derivative order {order} needs a longer window")

    @property
    def center(self):
        self._require()
        return self.states[self.length // 2]

    @property
    def grid(self):
        return self.states[0].grid

    @property
    def dt(self) -> float:
        self._require()
        return self.states[1].t - self.states[0].t

    def weights(self, order: int) -> np.ndarray:
        self._require(order)
        key = (order, self.dt)
        if key not in self._weights:
            offsets = np.arange(self.length) - self.length // 2
            self._weights[key] = fornberg_weights(0.0, offsets * self.dt, order)
        return self._weights[key]

    def derivative(self, fn, order: int = 1) -> np.ndarray:
        """``order``-th time derivative at the centre of ``fn(state)``."""
        if order == 0:
            return np.asarray(fn(self.center), dtype=float)
        w = self.weights(order)
        return sum(wj * np.asarray(fn(s), dtype=float) for wj, s in zip(w, self.states))

    def series(self, fn, order: int) -> Series:
        """Truncated Taylor series at the centre (normalized coefficients)."""
        self._require(order)
        samples = np.stack([np.asarray(fn(s), dtype=float) for s in self.states])
        coeffs = [samples[self.length // 2]]
        fact = 1.0
        for n in range(1, order + 1):
            fact *= n
            coeffs.append(np.tensordot(self.weights(n), samples, axes=1) / fact)
        return Series(np.stack(coeffs))
