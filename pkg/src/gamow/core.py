"""Shared value types, exceptions and small exact helpers.

Conventions used across the package:

* hbar = 1, so times carry inverse-energy units.
* The Jordan-chain kets |k> (k = 0..r-1) of a pole of order r are paired
  with a dual set of bras by <m|k> = delta_mk.  Every operator matrix is
  written in that pairing: entry (k, l) multiplies |k><l|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GamowError(Exception):
    """Base class for all errors raised by this package."""


class ArrowOfTimeViolation(GamowError, ValueError):
    """Raised when an evolution is requested for t < 0."""


class IndexOutOfRange(GamowError, IndexError):
    pass


class NonFinite(GamowError, ArithmeticError):
    pass


class EmptyGrid(GamowError, ValueError):
    pass


class BadGrid(GamowError, ValueError):
    pass


def require_forward_time(t: float) -> float:
    t = float(t)
    if not t >= 0.0:
        raise ArrowOfTimeViolation(
            f"semigroup evolution is only defined for t >= 0 (got t={t!r})"
        )
    return t


@dataclass(frozen=True)
class ComplexPole:
    """A decaying resonance pole at ``E_R - i*Gamma/2`` of the given order."""

    E_R: float
    Gamma: float
    order: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.E_R) and math.isfinite(self.Gamma)):
            raise ValueError("E_R and Gamma must be finite")
        if not self.Gamma > 0:
            raise ValueError(f"Gamma must be > 0, got {self.Gamma!r}")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be an integer >= 1, got {self.order!r}")
        object.__setattr__(self, "order", int(self.order))

    @property
    def z(self) -> complex:
        return pole_position(self)


def pole_position(pole: ComplexPole) -> complex:
    return complex(pole.E_R, -0.5 * pole.Gamma)


def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient; zero outside ``0 <= k <= n``."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _frozen_array(a, dtype=complex) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GamowState:
    """Coefficients of a vector in the span of the Jordan chain of ``pole``.

    ``coeffs[k]`` multiplies the chain ket of degree k+1.
    """

    pole: ComplexPole
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = _frozen_array(self.coeffs).reshape(-1)
        if c.shape[0] != self.pole.order:
            raise ValueError(
                f"expected {self.pole.order} coefficients, got {c.shape[0]}"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, pole: ComplexPole, k: int) -> "GamowState":
        if not 0 <= k < pole.order:
            raise IndexOutOfRange(f"k={k} outside 0..{pole.order - 1}")
        c = np.zeros(pole.order, dtype=complex)
        c[k] = 1.0
        return cls(pole, c)

    def __repr__(self):
        return f"GamowState(pole={self.pole!r}, coeffs={self.coeffs.tolist()!r})"


@dataclass(frozen=True, eq=False)
class GamowOperator:
    """Operator on the chain subspace; ``matrix[k, l]`` multiplies |k><l|."""

    pole: ComplexPole
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen_array(self.matrix)
        r = self.pole.order
        if m.shape != (r, r):
            raise ValueError(f"expected a {r}x{r} matrix, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.pole.order

    def __repr__(self):
        return f"GamowOperator(pole={self.pole!r}, matrix={self.matrix.tolist()!r})"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform forward time grid ``t0 + i*dt`` for ``i = 0..steps``."""

    t0: float = 0.0
    dt: float = 0.1
    steps: int = 100

    def __post_init__(self):
        if not self.t0 >= 0:
            raise ArrowOfTimeViolation(f"grid must start at t >= 0 (got t0={self.t0!r})")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be an integer >= 1, got {self.steps!r}")

    @classmethod
    def spanning(cls, t_max: float, points: int) -> "TimeGrid":
        """``points`` equally spaced times covering ``[0, t_max]``."""
        if t_max < 0:
            raise ArrowOfTimeViolation(f"t_max must satisfy t >= 0 (got {t_max!r})")
        if points < 2 or t_max == 0:
            raise ValueError("need t_max > 0 and at least 2 points")
        return cls(0.0, t_max / (points - 1), points - 1)

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)
