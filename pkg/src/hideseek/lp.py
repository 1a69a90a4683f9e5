"""Dense two-phase simplex with Bland's rule.

Works over :class:`fractions.Fraction` (``eps=0``, exact) or floats
(``eps > 0``).  Problems here are small (a few boxes by at most a few hundred
sequences), so a plain tableau is fast enough.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list | None = None
    fun: object = None
    duals: list | None = None  # per inequality row, when every row is "<=" with b >= 0


def _pivot(tab: list[list], row: int, col: int) -> None:
    piv = tab[row][col]
    tab[row] = [v / piv for v in tab[row]]
    prow = tab[row]
    for i, other in enumerate(tab):
        if i != row and other[col] != 0:
            f = other[col]
            tab[i] = [a - f * b for a, b in zip(other, prow)]


def _optimise(tab, basis, cost, allowed, eps) -> str:
    """Maximise cost . x over the tableau in place."""
    m = len(tab)
    width = len(tab[0]) - 1
    while True:
        entering = None
        for j in range(width):
            if not allowed[j] or j in basis:
                continue
            reduced = sum(cost[basis[i]] * tab[i][j] for i in range(m)) - cost[j]
            if reduced < -eps:
                entering = j
                break
        if entering is None:
            return "optimal"
        leaving = None
        best = None
        for i in range(m):
            a = tab[i][entering]
            if a > eps:
                ratio = tab[i][-1] / a
                if best is None or ratio < best - eps or (abs(ratio - best) <= eps and basis[i] < basis[leaving]):
                    best, leaving = ratio, i
        if leaving is None:
            return "unbounded"
        _pivot(tab, leaving, entering)
        basis[leaving] = entering


def linprog(c: Sequence, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (),
            A_eq: Sequence[Sequence] = (), b_eq: Sequence = (), eps=0) -> LPResult:
    """Maximise ``c . x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    n = len(c)
    exact = eps == 0
    conv = Fraction if exact else float
    rows = []  # (coeffs, sense, rhs) with rhs >= 0
    for a, b in zip(A_ub, b_ub):
        a, b = [conv(v) for v in a], conv(b)
        rows.append((a, "le", b) if b >= 0 else ([-v for v in a], "ge", -b))
    for a, b in zip(A_eq, b_eq):
        a, b = [conv(v) for v in a], conv(b)
        rows.append((a, "eq", b) if b >= 0 else ([-v for v in a], "eq", -b))
    m = len(rows)
    n_slack = sum(1 for _, s, _ in rows if s != "eq")
    n_art = sum(1 for _, s, _ in rows if s != "le")
    width = n + n_slack + n_art
    zero, one = conv(0), conv(1)
    tab = []
    basis = []
    slack_at, art_at = n, n + n_slack
    artificial = set()
    for a, sense, b in rows:
        row = list(a) + [zero] * (n_slack + n_art) + [b]
        if sense == "le":
            row[slack_at] = one
            basis.append(slack_at)
            slack_at += 1
        else:
            if sense == "ge":
                row[slack_at] = -one
                slack_at += 1
            row[art_at] = one
            basis.append(art_at)
            artificial.add(art_at)
            art_at += 1
        tab.append(row)
    allowed = [True] * width
    if artificial:
        phase1 = [zero] * width
        for j in artificial:
            phase1[j] = -one
        _optimise(tab, basis, phase1, allowed, eps)
        infeas = sum(tab[i][-1] for i in range(m) if basis[i] in artificial)
        if infeas > eps:
            return LPResult("infeasible")
        # drive zero-level artificials out of the basis, dropping redundant rows
        for i in reversed(range(m)):
            if basis[i] in artificial:
                col = next((j for j in range(n + n_slack) if abs(tab[i][j]) > eps), None)
                if col is None:
                    del tab[i], basis[i]
                else:
                    _pivot(tab, i, col)
                    basis[i] = col
        for j in artificial:
            allowed[j] = False
        m = len(tab)
    cost = [conv(v) for v in c] + [zero] * (n_slack + n_art)
    status = _optimise(tab, basis, cost, allowed, eps)
    if status != "optimal":
        return LPResult(status)
    x = [zero] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = tab[i][-1]
    duals = None
    if not artificial and not A_eq:
        # the reduced cost of each slack column is that row's shadow price
        duals = [sum(cost[basis[i]] * tab[i][n + s] for i in range(len(tab))) for s in range(n_slack)]
    return LPResult("optimal", x, sum(ci * xi for ci, xi in zip(cost, x)), duals)


def solve_matrix_game(payoff: Sequence[Sequence], eps=0):
    """Value and optimal strategies of a zero-sum game with row player
    maximising and column player minimising.  Entries must be positive.

    Returns ``(value, row_strategy, column_strategy)``.
    """
    rows = len(payoff)
    # column player: max sum(x) s.t. A x <= 1, value = 1/sum(x); the row
    # player's strategy is the dual solution y (A^T y >= 1, sum(y) = sum(x))
    col = linprog([1] * len(payoff[0]), A_ub=payoff, b_ub=[1] * rows, eps=eps)
    if col.status != "optimal":
        raise ArithmeticError("matrix game LP failed; are all entries positive?")
    value = 1 / sum(col.x)
    y = col.duals
    if (eps == 0 and sum(y) != sum(col.x)) or (eps and abs(sum(y) - sum(col.x)) > 1e-9 * sum(col.x)):
        raise ArithmeticError(f"primal/dual objectives differ: {sum(col.x)} vs {sum(y)}")
    return value, [v * value for v in y], [x * value for x in col.x]
