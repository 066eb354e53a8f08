import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gamow.density import conjugation_coefficients
from gamow import (
    ArrowOfTimeViolation,
    ComplexPole,
    EmptyGrid,
    GamowOperator,
    IndexOutOfRange,
    TimeGrid,
    build_density,
    check_exponential,
    evolve_density,
    exponential_subspace,
    expm_oracle,
    frobenius_norm,
    hamiltonian_matrix,
    operator_rank,
    projection_residual,
)

from oracles import exact_decay_nullspace


def test_build_density_examples():
    p3 = ComplexPole(1.0, 1.0, 3)
    w0 = build_density(p3, 0).matrix
    assert w0[0, 0] == 1 and np.count_nonzero(w0) == 1
    np.testing.assert_array_equal(build_density(ComplexPole(1.0, 1.0, 2), 1).matrix, [[0, 1], [1, 0]])
    np.testing.assert_array_equal(build_density(p3, 2).matrix, [[0, 0, 1], [0, 2, 0], [1, 0, 0]])
    with pytest.raises(IndexOutOfRange):
        build_density(p3, 3)


def test_build_density_is_real_symmetric():
    for r in range(1, 8):
        p = ComplexPole(0.0, 1.0, r)
        for n in range(r):
            m = build_density(p, n).matrix
            assert not np.any(m.imag)
            np.testing.assert_array_equal(m, m.T)


def test_evolve_density_n1_example(pole2):
    w = evolve_density(build_density(pole2, 1), 2.0).matrix
    # Conjugation with the independent oracle propagator.
    u = expm_oracle(hamiltonian_matrix(pole2).matrix, 2.0)
    ref = u @ build_density(pole2, 1).matrix @ u.conj().T
    np.testing.assert_allclose(w, ref, atol=1e-15)
    np.testing.assert_allclose(w, [[0, 0.1353352832366127], [0.1353352832366127, 0]], atol=1e-15)


def test_evolve_density_identity_at_zero(pole2):
    w = GamowOperator(pole2, [[1, 2j], [3, 4]])
    np.testing.assert_array_equal(evolve_density(w, 0.0).matrix, w.matrix)
    with pytest.raises(ArrowOfTimeViolation):
        evolve_density(w, -0.1)


def test_negative_control_expansion(pole2):
    # e^{-Gamma t}(|1><1| + it|1><0| - it|0><1| + t^2|0><0|) at t = 1.
    w = evolve_density(GamowOperator(pole2, [[0, 0], [0, 1]]), 1.0).matrix
    expected = np.exp(-1.0) * np.array([[1, -1j], [1j, 1]])
    np.testing.assert_allclose(w, expected, atol=1e-15)


def test_check_exponential_examples(pole2):
    grid = TimeGrid(0.0, 0.1, 100)
    for r in range(1, 8):
        p = ComplexPole(1.0, 1.0, r)
        for n in range(r):
            rep = check_exponential(build_density(p, n), grid, 1e-10)
            assert rep.is_exponential and rep.max_deviation <= 1e-10
    bad = check_exponential(GamowOperator(pole2, [[0, 0], [0, 1]]), grid, 1e-10)
    assert not bad.is_exponential
    zero = check_exponential(GamowOperator(pole2, np.zeros((2, 2))), grid, 1e-10)
    assert zero.is_exponential and zero.max_deviation == 0.0
    with pytest.raises(EmptyGrid):
        check_exponential(build_density(pole2, 0), [], 1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 7), st.data(), st.floats(0.1, 5), st.floats(0, 10))
def test_decay_law_and_norm(r, data, gamma, t):
    p = ComplexPole(0.5, gamma, r)
    n = data.draw(st.integers(0, r - 1))
    w0 = build_density(p, n)
    wt = evolve_density(w0, t)
    assert np.max(np.abs(wt.matrix - np.exp(-gamma * t) * w0.matrix)) <= 1e-10
    assert abs(frobenius_norm(wt) - np.exp(-gamma * t) * frobenius_norm(w0)) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.floats(0, 5), st.integers(0, 2**31 - 1))
def test_hermiticity_preserved(r, t, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    w = evolve_density(GamowOperator(ComplexPole(1.0, 0.8, r), a + a.conj().T), t).matrix
    assert np.max(np.abs(w - w.conj().T)) <= 1e-12


def test_odd_density_is_traceless():
    for r in range(2, 8):
        p = ComplexPole(0.0, 1.0, r)
        for n in range(1, r, 2):
            assert np.trace(build_density(p, n).matrix) == 0


def test_mixture_rank():
    for r in range(2, 8):
        p = ComplexPole(0.0, 1.0, r)
        assert operator_rank(build_density(p, 0)) == 1
        for n in range(1, r):
            assert operator_rank(build_density(p, n)) > 1


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_exact_nullspace_oracle_is_the_density_span(r):
    exact = exact_decay_nullspace(r)
    assert len(exact) == r
    p = ComplexPole(0.0, 1.0, r)
    basis = [GamowOperator(p, m) for m in exact]
    for n in range(r):
        assert projection_residual(build_density(p, n), basis) <= 1e-14


def test_exponential_subspace_small_cases():
    b1 = exponential_subspace(ComplexPole(1.0, 1.0, 1))
    assert len(b1) == 1 and b1[0].matrix[0, 0] != 0
    p2 = ComplexPole(1.0, 1.0, 2)
    b2 = exponential_subspace(p2)
    assert len(b2) == 2
    span = [GamowOperator(p2, [[1, 0], [0, 0]]), GamowOperator(p2, [[0, 1], [1, 0]])]
    for b in b2:
        assert projection_residual(b, span) <= 1e-12
    for s in span:
        assert projection_residual(s, b2) <= 1e-12


@pytest.mark.parametrize("r", [1, 2, 3, 4, 5, 6])
def test_exponential_subspace_matches_exact_oracle(r):
    p = ComplexPole(0.3, 0.7, r)
    basis = exponential_subspace(p)
    assert len(basis) == r
    exact = [GamowOperator(p, m) for m in exact_decay_nullspace(r)] if r <= 4 else [
        build_density(p, n) for n in range(r)
    ]
    for e in exact:
        assert projection_residual(e, basis) <= 1e-8
    for b in basis:
        assert projection_residual(b, exact) <= 1e-8
        assert check_exponential(b, np.linspace(0, 1, 11), 1e-8).is_exponential


@pytest.mark.parametrize("r", [2, 3, 4, 5, 6])
def test_uniqueness_antidiagonal_structure(r):
    p = ComplexPole(0.0, 1.0, r)
    basis = exponential_subspace(p)
    rng = np.random.default_rng(r)
    anti = np.add.outer(np.arange(r), np.arange(r))
    for _ in range(10):
        coef = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        member = sum(c * b.matrix for c, b in zip(coef, basis))
        n = max(int(anti[i, j]) for i, j in zip(*np.nonzero(np.abs(member) > 1e-9)))
        lower = np.stack([build_density(p, m).matrix.ravel() for m in range(n)], axis=1) if n else None
        rest = member.ravel()
        if lower is not None:
            c, *_ = np.linalg.lstsq(lower, rest, rcond=None)
            rest = rest - lower @ c
        wn = build_density(p, n).matrix.ravel()
        scale = np.vdot(wn, rest) / np.vdot(wn, wn)
        assert np.max(np.abs(rest - scale * wn)) <= 1e-8 * max(1.0, np.max(np.abs(rest)))


def test_exponential_subspace_deterministic():
    p = ComplexPole(0.0, 1.0, 5)
    a = [b.matrix for b in exponential_subspace(p)]
    b = [b.matrix for b in exponential_subspace(p)]
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.floats(0, 4), st.integers(0, 2**31 - 1))
def test_polynomial_route_matches_oracle_conjugation(r, t, seed):
    rng = np.random.default_rng(seed)
    p = ComplexPole(0.2, 1.3, r)
    w = GamowOperator(p, rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)))
    u = expm_oracle(hamiltonian_matrix(p).matrix, t)
    ref = u @ w.matrix @ u.conj().T
    got = evolve_density(w, t).matrix
    direct = evolve_density(w, t, method="direct").matrix
    scale = max(1.0, np.max(np.abs(ref)))
    assert np.max(np.abs(got - ref)) <= 1e-12 * scale
    assert np.max(np.abs(direct - ref)) <= 1e-12 * scale


def test_conjugation_coefficients_of_densities_vanish_beyond_constant():
    for r in range(1, 9):
        p = ComplexPole(0.0, 1.0, r)
        for n in range(r):
            w = build_density(p, n)
            c = conjugation_coefficients(w)
            np.testing.assert_array_equal(c[0], w.matrix)
            assert all(not np.any(cm) for cm in c[1:])


def test_conjugation_coefficients_negative_control(pole2):
    c = conjugation_coefficients(GamowOperator(pole2, [[0, 0], [0, 1]]))
    np.testing.assert_array_equal(c[0], [[0, 0], [0, 1]])
    np.testing.assert_array_equal(c[1], [[0, -1j], [1j, 0]])
    np.testing.assert_array_equal(c[2], [[1, 0], [0, 0]])
