"""Barotropic pressure law q(R) = (R^gamma - Rbar^gamma) / gamma."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DensityRangeError(ValueError):
    def __init__(self, value: float, where, lo: float, hi: float):
        self.value = value
        self.where = where
        super().__init__(
            f"density {value:.6g} at node {where} outside admissible range [{lo:.6g}, {hi:.6g}]")


@dataclass(frozen=True)
class PressureLaw:
    gamma: float = 1.4
    rbar: float = 1.0
    m0: float = 0.5
    M0: float = 2.0

    def __post_init__(self):
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if self.m0 <= 0:
            raise ValueError("m0 must be positive: the density lower bound m0 <= R0 needs m0 > 0")
        if self.M0 <= self.m0:
            raise ValueError("M0 must exceed m0")
        if self.rbar <= 0:
            raise ValueError("rbar must be positive")

    # these use operators only, so they also accept taylor.Series
    def q(self, R):
        return (R ** self.gamma - self.rbar ** self.gamma) / self.gamma

    def dq(self, R):
        return R ** (self.gamma - 1.0)

    def ddq(self, R):
        return (self.gamma - 1.0) * R ** (self.gamma - 2.0)

    def dq_over_R(self, R):
        return R ** (self.gamma - 2.0)

    @property
    def admissible(self) -> tuple[float, float]:
        return self.m0 / 2.0, 2.0 * self.M0

    @property
    def c1(self) -> float:
        """Lower bound of q' on the admissible range."""
        return float(self.dq(self.admissible[0]))

    @property
    def c2(self) -> float:
        return float(self.dq(self.admissible[1]))

    def check_range(self, R):
        lo, hi = self.admissible
        R = np.asarray(R)
        bad = ~((R >= lo) & (R <= hi))
        if bad.any():
            idx = np.unravel_index(np.argmax(bad), R.shape)
            raise DensityRangeError(float(R[idx]), tuple(int(i) for i in idx), lo, hi)


def pressure_eval(law: PressureLaw, R):
    """(q, q', q'') at every node; raises if R leaves the admissible range."""
    law.check_range(R)
    return law.q(R), law.dq(R), law.ddq(R)
