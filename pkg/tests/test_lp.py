from __future__ import annotations

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog as scipy_linprog

from hideseek.lp import linprog, solve_matrix_game


def test_small_lp():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    res = linprog([1, 1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    assert res.status == "optimal"
    assert res.x == [F(8, 5), F(6, 5)] and res.fun == F(14, 5)
    assert res.duals == [F(2, 5), F(1, 5)]


def test_equality_and_infeasible():
    res = linprog([1, 0], A_ub=[[1, 1]], b_ub=[3], A_eq=[[1, -1]], b_eq=[1])
    assert res.status == "optimal" and res.x == [2, 1]
    assert linprog([1], A_ub=[[1]], b_ub=[1], A_eq=[[1]], b_eq=[2]).status == "infeasible"
    assert linprog([1, 0], A_ub=[[-1, 1]], b_ub=[1]).status == "unbounded"


def test_matching_pennies_style_game():
    value, row, col = solve_matrix_game([[3, 1], [1, 3]])
    assert value == 2 and row == [F(1, 2), F(1, 2)] and col == [F(1, 2), F(1, 2)]
    assert solve_matrix_game([[5]]) == (5, [1], [1])


matrices = st.integers(1, 4).flatmap(
    lambda m: st.integers(1, 4).flatmap(
        lambda n: st.lists(st.lists(st.integers(1, 20), min_size=n, max_size=n), min_size=m, max_size=m)))


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_game_value_matches_scipy(payoff):
    value, row, col = solve_matrix_game(payoff)
    a = np.array(payoff, dtype=float)
    rows, cols = a.shape
    # column player minimises v subject to A x <= v, sum x = 1
    res = scipy_linprog(
        c=[0] * cols + [1],
        A_ub=np.hstack([a, -np.ones((rows, 1))]),
        b_ub=np.zeros(rows),
        A_eq=[[1] * cols + [0]],
        b_eq=[1],
        bounds=[(0, None)] * cols + [(None, None)],
    )
    assert res.status == 0
    assert float(value) == pytest.approx(res.fun, rel=1e-9)
    assert sum(row) == 1 and sum(col) == 1
    # both strategies guarantee the value exactly
    for i in range(rows):
        assert sum(payoff[i][j] * col[j] for j in range(cols)) <= value
    for j in range(cols):
        assert sum(payoff[i][j] * row[i] for i in range(rows)) >= value


@settings(max_examples=30, deadline=None)
@given(matrices)
def test_float_mode_agrees(payoff):
    exact = solve_matrix_game(payoff)[0]
    approx = solve_matrix_game(payoff, eps=1e-12)[0]
    assert approx == pytest.approx(float(exact), rel=1e-9)
