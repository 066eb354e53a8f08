"""Breit-Wigner line shape, its energy derivatives and pole terms.

Derivatives are taken with respect to the energy E.  Since the line shape
depends on ``E - E_R`` only, ``d/dE = -d/dE_R``.  Higher-order line shapes
can go negative; nothing is clamped.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ComplexPole, GamowError, pole_position

__all__ = [
    "DivergentPoint",
    "WeightLengthMismatch",
    "pole_term",
    "lorentzian",
    "lorentzian_derivative",
    "higher_order_lineshape",
]


class DivergentPoint(GamowError, ZeroDivisionError):
    pass


class WeightLengthMismatch(GamowError, ValueError):
    pass


_DIVERGENCE_FLOOR = 1e-300


def pole_term(E, z: complex, m: int = 1):
    """``1 / (E - z)**m``; raises :class:`DivergentPoint` on top of the pole."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    d = np.asarray(E, dtype=float) - complex(z)
    if np.any(np.abs(d) < _DIVERGENCE_FLOOR):
        raise DivergentPoint(f"E hits the pole z={z}")
    out = d ** (-m)
    return complex(out) if out.ndim == 0 else out


def _check_gamma(Gamma):
    if not Gamma > 0:
        raise ValueError(f"Gamma must be > 0, got {Gamma!r}")


def lorentzian(E, E_R: float, Gamma: float):
    """Normalised Breit-Wigner density ``(Gamma/2pi) / ((E-E_R)^2 + Gamma^2/4)``.

    Written as ``1 / (pi g (1 + u^2))`` with ``g = Gamma/2`` and
    ``u = (E-E_R)/g`` so that the peak is bitwise ``2/(pi*Gamma)``.
    """
    _check_gamma(Gamma)
    g = 0.5 * Gamma
    u = (np.asarray(E, dtype=float) - E_R) / g
    out = 1.0 / (math.pi * g * (1.0 + u * u))
    return float(out) if out.ndim == 0 else out


def lorentzian_derivative(E, E_R: float, Gamma: float, k: int = 0):
    """k-th E-derivative of :func:`lorentzian`, ``-(1/pi) Im[(-1)^k k! / (E - z)^(k+1)]``."""
    _check_gamma(Gamma)
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k == 0:
        return lorentzian(E, E_R, Gamma)
    z = complex(E_R, -0.5 * Gamma)
    term = pole_term(E, z, k + 1)
    out = -((-1) ** k) * math.factorial(k) * np.imag(term) / math.pi
    return float(out) if np.ndim(out) == 0 else out


def higher_order_lineshape(E, pole: ComplexPole, weights):
    """Weighted sum of the Breit-Wigner density and its first ``len(weights)-1`` derivatives."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size == 0:
        raise WeightLengthMismatch("at least one weight is required")
    if w.size > pole.order:
        raise WeightLengthMismatch(
            f"{w.size} weights but a pole of order {pole.order} supports at most {pole.order}"
        )
    z = pole_position(pole)
    total = np.zeros(np.shape(E), dtype=float)
    for k, wk in enumerate(w):
        if wk != 0:
            total = total + wk * lorentzian_derivative(E, z.real, pole.Gamma, k)
    return float(total) if total.ndim == 0 else total
