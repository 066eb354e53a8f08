"""Jordan-block Hamiltonian on the chain subspace and its forward evolution."""

from __future__ import annotations

import math

import numpy as np

from .core import (
    ComplexPole,
    GamowOperator,
    GamowState,
    IndexOutOfRange,
    NonFinite,
    binomial,
    pole_position,
    require_forward_time,
)

__all__ = [
    "hamiltonian_matrix",
    "evolution_matrix",
    "evolve_ket",
    "evolve_state",
    "expm_oracle",
]


def hamiltonian_matrix(pole: ComplexPole) -> GamowOperator:
    """Matrix of H restricted to the chain: ``H|k> = z|k> + k|k-1>``.

    The superdiagonal carries 1, 2, ..., r-1 (not the all-ones Jordan form).
    """
    r = pole.order
    h = np.diag(np.full(r, pole_position(pole), dtype=complex))
    for k in range(1, r):
        h[k - 1, k] = k
    return GamowOperator(pole, h)


def evolution_matrix(pole: ComplexPole, t: float) -> np.ndarray:
    """Closed-form ``exp(-iHt)`` on the chain, column k = evolved |k>.

    Entry ``[k - nu, k]`` is ``exp(-i z t) * C(k, nu) * (-i t)**nu``.
    """
    t = require_forward_time(t)
    r = pole.order
    phase = np.exp(-1j * pole_position(pole) * t)
    u = np.zeros((r, r), dtype=complex)
    for k in range(r):
        for nu in range(k + 1):
            u[k - nu, k] = binomial(k, nu) * (-1j * t) ** nu
    return phase * u


def evolve_ket(pole: ComplexPole, k: int, t: float) -> GamowState:
    t = require_forward_time(t)
    if not 0 <= k < pole.order:
        raise IndexOutOfRange(f"k={k} outside 0..{pole.order - 1}")
    phase = np.exp(-1j * pole_position(pole) * t)
    c = np.zeros(pole.order, dtype=complex)
    for nu in range(k + 1):
        c[k - nu] = phase * binomial(k, nu) * (-1j * t) ** nu
    return GamowState(pole, c)


def evolve_state(state: GamowState, t: float) -> GamowState:
    """Evolve an arbitrary superposition of chain kets forward by ``t``."""
    t = require_forward_time(t)
    pole = state.pole
    out = np.zeros(pole.order, dtype=complex)
    for k, ck in enumerate(state.coeffs):
        if ck != 0:
            out += ck * evolve_ket(pole, k, t).coeffs
    return GamowState(pole, out)


def _shifted_nilpotent(m: np.ndarray):
    """Return (z, N) if ``m = z*I + N`` with N strictly upper triangular."""
    d = np.diag(m)
    if np.any(np.tril(m, -1) != 0) or np.any(d != d[0]):
        return None
    return d[0], np.triu(m, 1)


def expm_oracle(matrix, t: float) -> np.ndarray:
    """Reference value of ``exp(-i * matrix * t)``, independent of the chain formula.

    For ``z*I + N`` with N strictly upper triangular the nilpotent series
    ``exp(-izt) * sum_nu (-it)^nu N^nu / nu!`` terminates at ``nu = r-1`` and is
    exact up to rounding.  Any other matrix goes through scaling and squaring:
    ``A = -i t M`` is halved s times until ``||A||_1 <= 1/2`` and the Taylor
    series is cut once the next term bound ``||A||^(q+1)/(q+1)!`` drops below
    ``2**-53``, giving a relative truncation error below unit roundoff before
    squaring.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or not math.isfinite(t):
        raise NonFinite("matrix and t must be finite")
    r = m.shape[0]
    if r == 0:
        return np.zeros((0, 0), dtype=complex)

    split = _shifted_nilpotent(m)
    if split is not None:
        z, n = split
        term = np.eye(r, dtype=complex)
        acc = term.copy()
        for nu in range(1, r):
            term = term @ n * (-1j * t) / nu
            acc = acc + term
        out = np.exp(-1j * z * t) * acc
    else:
        a = -1j * t * m
        norm = np.linalg.norm(a, 1)
        s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
        a = a / 2.0**s
        na = norm / 2.0**s
        term = np.eye(r, dtype=complex)
        out = term.copy()
        q = 0
        bound = 1.0
        while bound > 2.0**-53:
            q += 1
            term = term @ a / q
            out = out + term
            bound = bound * na / (q + 1)
            if q > 60:
                break
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(s):
                out = out @ out

    if not np.all(np.isfinite(out)):
        raise NonFinite("matrix exponential overflowed")
    return out
