"""Certifying verifiers for pacing equilibria.

Every verifier is pure, exact and total: it returns a report listing *all*
violated conditions with witnesses (indices plus both sides of the violated
relation), never just the first failure.  Dimension errors raise; semantic
failures are reported.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .flow import feasible_flow
from .game import (
    Allocation,
    ApproxParams,
    EquilibriumCandidate,
    GameError,
    PacingProfile,
    SPPGame,
    _check_dims,
    fmt_rat,
    good_price,
    highest_bid,
    second_price,
    winning_threshold,
)


@dataclass(frozen=True)
class Violation:
    condition: str
    buyer: Optional[int]
    good: Optional[int]
    lhs: Fraction
    rhs: Fraction
    message: str

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "buyer": self.buyer,
            "good": self.good,
            "lhs": fmt_rat(self.lhs),
            "rhs": fmt_rat(self.rhs),
            "message": self.message,
        }


@dataclass(frozen=True)
class VerifyReport:
    violations: tuple[Violation, ...]
    allocation: Optional[Allocation] = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        doc = {
            "passed": self.passed,
            "violations": [v.to_dict() for v in self.violations],
        }
        if self.allocation is not None:
            doc["allocation"] = [[fmt_rat(v) for v in row] for row in self.allocation.x]
        return doc


def _report(violations, allocation=None) -> VerifyReport:
    return VerifyReport(tuple(violations), allocation)


def verify_exact(game: SPPGame, candidate: EquilibriumCandidate) -> VerifyReport:
    """Exact pacing equilibrium check (conditions (a)-(d), exact equality)."""
    if game.has_reserves:
        raise GameError("game has reserves; use verify_reserve")
    return verify_approx(game, candidate, ApproxParams.exact())


def verify_approx(
    game: SPPGame, candidate: EquilibriumCandidate, params: ApproxParams
) -> VerifyReport:
    """(delta, gamma)-approximate pacing equilibrium check.

    (a) winners bid at least (1-delta) of the highest bid, (b) goods with a
    positive bid are fully allocated, (c) budgets hold, (d) a buyer spending
    less than (1-gamma) of her budget has a multiplier of at least 1-gamma.
    """
    if game.has_reserves:
        raise GameError("game has reserves; use verify_reserve")
    profile, alloc = candidate.profile, candidate.allocation
    _check_dims(game, profile, alloc)
    delta, gamma = params.delta, params.gamma
    violations = []
    for j in range(game.m):
        h = highest_bid(game, profile, j)
        threshold = (1 - delta) * h
        for i in range(game.n):
            if alloc.x[i][j] > 0:
                bid = profile.alpha[i] * game.values[i][j]
                if bid < threshold:
                    violations.append(
                        Violation(
                            "a", i, j, bid, threshold,
                            f"buyer {i} wins good {j} bidding {bid} < "
                            f"(1-delta)*h = {threshold}",
                        )
                    )
        if h > 0:
            total = alloc.column_sum(j)
            if total != 1:
                violations.append(
                    Violation(
                        "b", None, j, total, Fraction(1),
                        f"good {j} has positive highest bid but allocation "
                        f"sums to {total} != 1",
                    )
                )
    for i in range(game.n):
        spend = sum(alloc.x[i][j] * second_price(game, profile, j) for j in range(game.m))
        if spend > game.budgets[i]:
            violations.append(
                Violation(
                    "c", i, None, spend, game.budgets[i],
                    f"buyer {i} spends {spend} > budget {game.budgets[i]}",
                )
            )
        if spend < (1 - gamma) * game.budgets[i] and profile.alpha[i] < 1 - gamma:
            violations.append(
                Violation(
                    "d", i, None, profile.alpha[i], 1 - gamma,
                    f"buyer {i} spends {spend} < (1-gamma)*budget but has "
                    f"multiplier {profile.alpha[i]} < {1 - gamma}",
                )
            )
    return _report(violations)


def smooth_allocation(game: SPPGame, profile: PacingProfile, delta: Fraction) -> Allocation:
    """Allocation induced by multipliers alone: normalized clipped surpluses.

    Each buyer's share of a good is her bid surplus over (1-delta) times the
    highest bid, clipped at zero and normalized per good (0/0 = 0).  For
    delta > 0 every good with a positive bid is fully allocated; at delta = 0
    the surpluses vanish identically, so columns degenerate to zero.
    """
    _check_dims(game, profile)
    delta = Fraction(delta)
    rows = [[Fraction(0)] * game.m for _ in range(game.n)]
    for j in range(game.m):
        h = highest_bid(game, profile, j)
        if h == 0:
            continue
        threshold = (1 - delta) * h
        surpluses = [
            max(profile.alpha[i] * game.values[i][j] - threshold, Fraction(0))
            for i in range(game.n)
        ]
        total = sum(surpluses)
        if total == 0:
            continue
        for i in range(game.n):
            rows[i][j] = surpluses[i] / total
    return Allocation(tuple(tuple(row) for row in rows))


def verify_smooth(
    game: SPPGame, profile: PacingProfile, params: ApproxParams
) -> VerifyReport:
    """Smooth approximate PE check: the allocation is induced from alpha.

    Computes the clipped-surplus allocation, then checks (b) budgets and (c)
    the pacing complementarity at gamma.  The induced allocation is attached
    to the report.
    """
    if game.has_reserves:
        raise GameError("game has reserves; use verify_reserve")
    _check_dims(game, profile)
    alloc = smooth_allocation(game, profile, params.delta)
    gamma = params.gamma
    violations = []
    for i in range(game.n):
        spend = sum(alloc.x[i][j] * second_price(game, profile, j) for j in range(game.m))
        if spend > game.budgets[i]:
            violations.append(
                Violation(
                    "b", i, None, spend, game.budgets[i],
                    f"buyer {i} spends {spend} > budget {game.budgets[i]}",
                )
            )
        if spend < (1 - gamma) * game.budgets[i] and profile.alpha[i] < 1 - gamma:
            violations.append(
                Violation(
                    "c", i, None, profile.alpha[i], 1 - gamma,
                    f"buyer {i} spends {spend} < (1-gamma)*budget but has "
                    f"multiplier {profile.alpha[i]} < {1 - gamma}",
                )
            )
    return _report(violations, alloc)


def verify_reserve(game: SPPGame, candidate: EquilibriumCandidate) -> VerifyReport:
    """Pacing equilibrium check in the presence of reserve prices.

    Winners must match the winning threshold max(h_j, r_j); goods are fully
    allocated only when the highest bid strictly exceeds the reserve (the
    seller may hold back fractions at the reserve); prices are max(p_j, r_j).
    """
    if not game.has_reserves:
        raise GameError("verify_reserve requires a game with reserves")
    profile, alloc = candidate.profile, candidate.allocation
    _check_dims(game, profile, alloc)
    violations = []
    for j in range(game.m):
        h = highest_bid(game, profile, j)
        big_h = winning_threshold(game, profile, j)
        for i in range(game.n):
            if alloc.x[i][j] > 0:
                bid = profile.alpha[i] * game.values[i][j]
                if bid != big_h:
                    violations.append(
                        Violation(
                            "a", i, j, bid, big_h,
                            f"buyer {i} wins good {j} bidding {bid} != "
                            f"winning threshold {big_h}",
                        )
                    )
        if h > game.reserve(j):
            total = alloc.column_sum(j)
            if total != 1:
                violations.append(
                    Violation(
                        "b", None, j, total, Fraction(1),
                        f"good {j} has highest bid above reserve but allocation "
                        f"sums to {total} != 1",
                    )
                )
    for i in range(game.n):
        spend = sum(alloc.x[i][j] * good_price(game, profile, j) for j in range(game.m))
        if spend > game.budgets[i]:
            violations.append(
                Violation(
                    "c", i, None, spend, game.budgets[i],
                    f"buyer {i} pays {spend} > budget {game.budgets[i]}",
                )
            )
        if spend < game.budgets[i] and profile.alpha[i] != 1:
            violations.append(
                Violation(
                    "d", i, None, profile.alpha[i], Fraction(1),
                    f"buyer {i} underspends ({spend} < {game.budgets[i]}) but has "
                    f"multiplier {profile.alpha[i]} != 1",
                )
            )
    return _report(violations)


def verify_wsne(
    a_costs: Sequence[Sequence],
    b_costs: Sequence[Sequence],
    x: Sequence,
    y: Sequence,
    epsilon: Fraction,
) -> VerifyReport:
    """Epsilon-well-supported Nash check for a bimatrix game with cost matrices.

    Every pure strategy played with positive probability must be within
    epsilon of the cheapest response to the opponent's mixed strategy.
    """
    n = len(a_costs)
    if len(b_costs) != n or any(len(row) != n for row in itertools.chain(a_costs, b_costs)):
        raise GameError("cost matrices must be square and of equal size")
    x = [Fraction(v) for v in x]
    y = [Fraction(v) for v in y]
    if len(x) != n or len(y) != n:
        raise GameError("strategy vectors must match the matrix size")
    for name, vec in (("x", x), ("y", y)):
        if any(v < 0 for v in vec) or sum(vec) != 1:
            raise GameError(f"{name} is not a probability distribution")
    epsilon = Fraction(epsilon)
    a = [[Fraction(v) for v in row] for row in a_costs]
    b = [[Fraction(v) for v in row] for row in b_costs]
    violations = []
    row_costs = [sum(a[i][j] * y[j] for j in range(n)) for i in range(n)]
    col_costs = [sum(x[i] * b[i][j] for i in range(n)) for j in range(n)]
    for i in range(n):
        if x[i] > 0:
            best = min(row_costs)
            if row_costs[i] > best + epsilon:
                violations.append(
                    Violation(
                        "x", i, None, row_costs[i], best + epsilon,
                        f"row strategy {i} played with positive probability "
                        f"costs {row_costs[i]} > best + epsilon = {best + epsilon}",
                    )
                )
    for j in range(n):
        if y[j] > 0:
            best = min(col_costs)
            if col_costs[j] > best + epsilon:
                violations.append(
                    Violation(
                        "y", j, None, col_costs[j], best + epsilon,
                        f"column strategy {j} played with positive probability "
                        f"costs {col_costs[j]} > best + epsilon = {best + epsilon}",
                    )
                )
    return _report(violations)


# ---------------------------------------------------------------------------
# Brute-force grid oracle.
# ---------------------------------------------------------------------------

def witness_allocation(
    game: SPPGame, profile: PacingProfile, params: ApproxParams
) -> Optional[Allocation]:
    """Some allocation making (alpha, x) a (delta, gamma)-approximate PE, or None.

    Eligible winners per good are the bidders within (1-delta) of the highest
    bid.  Goods with a positive second price must ship exactly their price in
    payments to eligible buyers; buyers paced below 1-gamma must absorb at
    least (1-gamma) of their budget.  That is a transportation feasibility
    problem, solved exactly as a small max-flow with lower bounds.
    """
    _check_dims(game, profile)
    delta, gamma = params.delta, params.gamma
    n, m = game.n, game.m
    bids = [[profile.alpha[i] * game.values[i][j] for j in range(m)] for i in range(n)]
    highest = [max(bids[i][j] for i in range(n)) for j in range(m)]
    prices = [second_price(game, profile, j) for j in range(m)]
    eligible = [
        [i for i in range(n) if highest[j] > 0 and bids[i][j] >= (1 - delta) * highest[j]]
        for j in range(m)
    ]
    lower = [
        (1 - gamma) * game.budgets[i] if profile.alpha[i] < 1 - gamma else Fraction(0)
        for i in range(n)
    ]
    # cheap necessary conditions before building the flow network
    for i in range(n):
        if lower[i] > 0:
            reachable = sum(prices[j] for j in range(m) if i in eligible[j] and prices[j] > 0)
            if reachable < lower[i]:
                return None
    for j in range(m):
        if prices[j] > 0 and sum(game.budgets[i] for i in eligible[j]) < prices[j]:
            return None

    edges = []
    for j in range(m):
        if prices[j] > 0:
            edges.append(("S", ("g", j), prices[j], prices[j]))
            for i in eligible[j]:
                edges.append((("g", j), ("b", i), Fraction(0), prices[j]))
    for i in range(n):
        edges.append((("b", i), "T", lower[i], game.budgets[i]))
    flows = feasible_flow(edges, "S", "T")
    if flows is None:
        return None

    rows = [[Fraction(0)] * m for _ in range(n)]
    for pos, (u, v, _, _) in enumerate(edges):
        if isinstance(u, tuple) and u[0] == "g" and isinstance(v, tuple):
            j, i = u[1], v[1]
            rows[i][j] = flows[pos] / prices[j]
    for j in range(m):
        if highest[j] > 0 and prices[j] == 0:
            share = Fraction(1, len(eligible[j]))
            for i in eligible[j]:
                rows[i][j] = share
    return Allocation(tuple(tuple(row) for row in rows))


def oracle_grid_search(
    game: SPPGame, resolution: int, params: ApproxParams
) -> Optional[EquilibriumCandidate]:
    """Enumerate multipliers over the {0, 1/K, ..., 1} grid; first witness wins.

    Scans profiles in lexicographic order, constructs a witness allocation per
    profile (when one exists) and returns the first candidate that passes
    verify_approx.  Intended as an independent test oracle for small games.
    """
    if game.has_reserves:
        raise GameError("grid oracle works on reserve-free games; transform first")
    if resolution < 1:
        raise GameError("resolution must be at least 1")
    grid = [Fraction(k, resolution) for k in range(resolution + 1)]
    for combo in itertools.product(grid, repeat=game.n):
        profile = PacingProfile(combo)
        alloc = witness_allocation(game, profile, params)
        if alloc is None:
            continue
        candidate = EquilibriumCandidate(profile, alloc)
        if verify_approx(game, candidate, params).passed:
            return candidate
    return None
