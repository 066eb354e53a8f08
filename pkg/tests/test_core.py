import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gamow import (
    ArrowOfTimeViolation,
    ComplexPole,
    GamowOperator,
    GamowState,
    IndexOutOfRange,
    TimeGrid,
    binomial,
    pole_position,
)

from oracles import pascal_row


@pytest.mark.parametrize(
    "er, gamma, expected",
    [(1.0, 0.5, 1.0 - 0.25j), (0.0, 2.0, -1.0j), (2.0, 0.6, 2.0 - 0.3j)],
)
def test_pole_position(er, gamma, expected):
    assert pole_position(ComplexPole(er, gamma)) == expected


@given(
    st.floats(-1e6, 1e6, allow_nan=False),
    st.floats(1e-9, 1e6, allow_nan=False),
)
def test_pole_below_axis(er, gamma):
    assert pole_position(ComplexPole(er, gamma)).imag < 0


@pytest.mark.parametrize("gamma", [0.0, -1.0, math.nan])
def test_pole_rejects_bad_width(gamma):
    with pytest.raises(ValueError):
        ComplexPole(1.0, gamma)


def test_pole_rejects_bad_order():
    with pytest.raises(ValueError):
        ComplexPole(1.0, 1.0, 0)


@pytest.mark.parametrize("n, k, expected", [(0, 0, 1), (2, 1, 2), (5, 2, 10), (3, -1, 0), (3, 4, 0)])
def test_binomial_values(n, k, expected):
    assert binomial(n, k) == expected


def test_binomial_pascal_rule():
    for n in range(1, 31):
        for k in range(1, n + 1):
            assert binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k)


def test_binomial_against_pascal_triangle():
    for n in range(31):
        assert [binomial(n, k) for k in range(n + 1)] == pascal_row(n)


def test_state_length_checked():
    p = ComplexPole(1.0, 1.0, 3)
    with pytest.raises(ValueError):
        GamowState(p, [1, 0])
    with pytest.raises(IndexOutOfRange):
        GamowState.basis(p, 3)


def test_state_is_immutable():
    s = GamowState.basis(ComplexPole(1.0, 1.0, 2), 1)
    with pytest.raises(ValueError):
        s.coeffs[0] = 1.0


def test_operator_shape_checked():
    with pytest.raises(ValueError):
        GamowOperator(ComplexPole(1.0, 1.0, 2), np.eye(3))


def test_time_grid():
    g = TimeGrid(0.0, 0.1, 100)
    t = g.times()
    assert t.size == 101 and t[0] == 0.0 and t[-1] == pytest.approx(10.0)
    assert np.all(t >= 0)
    with pytest.raises(ArrowOfTimeViolation):
        TimeGrid(-0.5, 0.1, 3)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 0.0, 3)
    assert TimeGrid.spanning(10.0, 101).times()[-1] == pytest.approx(10.0)
