"""Higher-order Gamow density operators and their decay behaviour.

``W(n) = sum_k C(n, k) |k><n-k|`` lives on the anti-diagonal ``k + l = n``.
Kets evolve with ``U(t)`` and bras with its conjugate, so an operator
evolves as ``U W U^dagger``.  The prefactor ``exp(-izt) * conj(exp(-izt))``
is exactly ``exp(-Gamma t)``; whatever polynomial in t survives the
conjugation decides whether the decay is purely exponential.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    ComplexPole,
    EmptyGrid,
    GamowOperator,
    IndexOutOfRange,
    TimeGrid,
    binomial,
    require_forward_time,
)
from .semigroup import evolution_matrix

__all__ = [
    "DecayReport",
    "build_density",
    "evolve_density",
    "conjugation_coefficients",
    "check_exponential",
    "exponential_subspace",
    "projection_residual",
    "operator_rank",
    "frobenius_norm",
]

# Polynomial coefficients are read off samples on [0, SAMPLE_WINDOW]; this
# window keeps the singular-value gap clean up to order 8.
SAMPLE_WINDOW = 3.0


def build_density(pole: ComplexPole, n: int) -> GamowOperator:
    if not 0 <= n < pole.order:
        raise IndexOutOfRange(f"n={n} outside 0..{pole.order - 1}")
    w = np.zeros((pole.order, pole.order), dtype=complex)
    for k in range(n + 1):
        w[k, n - k] = binomial(n, k)
    return GamowOperator(pole, w)


@lru_cache(maxsize=None)
def _chain_binomials(r: int) -> tuple:
    """``B[nu]`` with ``B[nu][k - nu, k] = C(k, nu)``, i.e. ``N^nu / nu!``."""
    out = []
    for nu in range(r):
        b = np.zeros((r, r))
        for k in range(nu, r):
            b[k - nu, k] = binomial(k, nu)
        b.setflags(write=False)
        out.append(b)
    return tuple(out)


# Operators are immutable, so their expansion can be kept alongside them.
_COEFF_CACHE: "weakref.WeakKeyDictionary[GamowOperator, tuple]" = weakref.WeakKeyDictionary()


def conjugation_coefficients(W: GamowOperator) -> list[np.ndarray]:
    """Matrices ``C[m]`` with ``exp(Gamma t) U W U^dagger = sum_m C[m] t^m``.

    With ``U = exp(-izt) sum_nu B[nu] (-it)^nu`` the t^m coefficient is
    ``sum_{nu+mu=m} (-i)^nu i^mu B[nu] W B[mu]^T``.  For integer W every
    product is an exact small integer, so any cancellation is exact.

    W is split into Hermitian and anti-Hermitian parts; for each, the
    (mu, nu) term is the (anti-)adjoint of the (nu, mu) term, which keeps a
    Hermitian W exactly Hermitian through the evolution.
    """
    cached = _COEFF_CACHE.get(W)
    if cached is not None:
        return list(cached)
    r = W.dim
    b = _chain_binomials(r)
    w = W.matrix
    wh = w.conj().T
    parts = [(0.5 * (w + wh), 1.0)]
    if np.any(w != wh):
        parts.append((0.5 * (w - wh), -1.0))
    coeffs = []
    for m in range(2 * r - 1):
        acc = np.zeros((r, r), dtype=complex)
        for part, sign in parts:
            for nu in range(max(0, m - r + 1), m // 2 + 1):
                mu = m - nu
                term = ((-1j) ** nu * 1j**mu) * (b[nu] @ part @ b[mu].T)
                if nu == mu:
                    acc += 0.5 * (term + sign * term.conj().T)
                else:
                    acc += term + sign * term.conj().T
        acc.setflags(write=False)
        coeffs.append(acc)
    _COEFF_CACHE[W] = tuple(coeffs)
    return coeffs


def _horner(coeffs, t):
    acc = np.zeros_like(coeffs[0])
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def evolve_density(W: GamowOperator, t: float, method: str = "polynomial") -> GamowOperator:
    """``W(t) = U(t) W U(t)^dagger`` for ``t >= 0``.

    ``method="polynomial"`` (default) expands the conjugation into powers of
    t first (see :func:`conjugation_coefficients`) and scales by
    ``exp(-Gamma t)``; ``method="direct"`` multiplies the floating-point
    propagators, which loses absolute accuracy once ``t^(2r-2)`` is large.
    """
    t = require_forward_time(t)
    if method == "direct":
        u = evolution_matrix(W.pole, t)
        return GamowOperator(W.pole, u @ W.matrix @ u.conj().T)
    if method != "polynomial":
        raise ValueError(f"unknown method {method!r}")
    poly = _horner(conjugation_coefficients(W), t)
    return GamowOperator(W.pole, np.exp(-W.pole.Gamma * t) * poly)


@dataclass(frozen=True)
class DecayReport:
    is_exponential: bool
    max_deviation: float
    times: tuple = ()
    deviations: tuple = ()


def _times(grid) -> np.ndarray:
    if isinstance(grid, TimeGrid):
        times = grid.times()
    else:
        times = np.asarray(grid, dtype=float).reshape(-1)
    if times.size == 0:
        raise EmptyGrid("no time points to evaluate")
    return times


def decay_deviation(W0: GamowOperator, t: float) -> float:
    """Max-entry ``|exp(Gamma t) W(t) - W(0)|``."""
    wt = evolve_density(W0, t).matrix
    return float(np.max(np.abs(np.exp(W0.pole.Gamma * t) * wt - W0.matrix), initial=0.0))


def check_exponential(W0: GamowOperator, grid, tol: float = 1e-10) -> DecayReport:
    """Test whether ``W0`` decays as ``exp(-Gamma t) * W0`` on every grid time.

    ``grid`` is a :class:`TimeGrid` or any sequence of times ``t >= 0``.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    times = _times(grid)
    for t in times:
        require_forward_time(t)
    coeffs = conjugation_coefficients(W0)
    gamma = W0.pole.Gamma
    devs = []
    for t in times:
        wt = np.exp(-gamma * t) * _horner(coeffs, t)
        devs.append(float(np.max(np.abs(np.exp(gamma * t) * wt - W0.matrix), initial=0.0)))
    worst = max(devs)
    return DecayReport(worst <= tol, worst, tuple(float(t) for t in times), tuple(devs))


def _chebyshev_times(count: int, window: float) -> np.ndarray:
    j = np.arange(count)
    return 0.5 * window * (1.0 - np.cos(np.pi * (j + 0.5) / count))


def decay_constraints(pole: ComplexPole, window: float = SAMPLE_WINDOW) -> np.ndarray:
    """Linear map from ``vec(C)`` to the t^m (m >= 1) coefficients of
    ``exp(Gamma t) U C U^dagger``.

    Rows are stacked (m, k, l) coefficient slots, columns the r*r entries of C
    in row-major order.  The polynomial has degree at most 2(r-1); it is
    sampled at 2r+1 Chebyshev times and the Vandermonde system is solved in
    the scaled variable ``t / window``.
    """
    r = pole.order
    degree = 2 * (r - 1)
    times = _chebyshev_times(2 * r + 1, window)
    vander = np.vander(times / window, degree + 1, increasing=True)
    growth = np.exp(pole.Gamma * times)

    a = np.zeros((degree * r * r, r * r), dtype=complex)
    for col in range(r * r):
        c = np.zeros(r * r, dtype=complex)
        c[col] = 1.0
        c = c.reshape(r, r)
        op = GamowOperator(pole, c)
        samples = np.stack([g * evolve_density(op, t).matrix for g, t in zip(growth, times)])
        coeffs, *_ = np.linalg.lstsq(vander, samples.reshape(len(times), -1), rcond=None)
        a[:, col] = coeffs[1:].reshape(-1)
    return a


def _canonical_phase(m: np.ndarray) -> np.ndarray:
    flat = m.reshape(-1)
    idx = int(np.argmax(np.abs(flat) > (1 - 1e-9) * np.max(np.abs(flat))))
    return m * (abs(flat[idx]) / flat[idx])


def exponential_subspace(pole: ComplexPole, tol: float = 1e-10) -> list[GamowOperator]:
    """Orthonormal basis of all operators whose decay is purely exponential.

    ``tol`` is the rank threshold relative to the largest singular value of
    the coefficient constraints.  Each basis matrix is Frobenius-normalised
    and phased so its first largest entry is real positive.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    r = pole.order
    if r == 1:
        # No t-dependence survives; every operator qualifies.
        return [GamowOperator(pole, np.ones((1, 1), dtype=complex))]
    a = decay_constraints(pole)
    _, s, vh = np.linalg.svd(a)
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    null = vh[rank:].conj()
    return [GamowOperator(pole, _canonical_phase(v.reshape(r, r))) for v in null]


def projection_residual(W: GamowOperator, basis: list[GamowOperator]) -> float:
    """Frobenius distance from ``W`` to the span of ``basis``, relative to ``||W||``."""
    w = W.matrix.reshape(-1)
    norm = np.linalg.norm(w)
    if not basis:
        return 1.0 if norm > 0 else 0.0
    b = np.stack([op.matrix.reshape(-1) for op in basis], axis=1)
    coef, *_ = np.linalg.lstsq(b, w, rcond=None)
    res = np.linalg.norm(w - b @ coef)
    return float(res / norm) if norm > 0 else float(res)


def operator_rank(W: GamowOperator, tol: float = 1e-10) -> int:
    s = np.linalg.svd(W.matrix, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def frobenius_norm(W: GamowOperator) -> float:
    return float(np.linalg.norm(W.matrix))
