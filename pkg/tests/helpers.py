"""Shared builders for the test suite."""
from __future__ import annotations

import random
from fractions import Fraction

from pacingeq.game import Allocation, EquilibriumCandidate, PacingProfile, SPPGame


def F(x, y=None) -> Fraction:
    return Fraction(x, y) if y is not None else Fraction(x)


def game(values, budgets, reserves=None) -> SPPGame:
    values = [list(row) for row in values]
    return SPPGame(len(values), len(values[0]), values, list(budgets), reserves)


def one_good(values_column, budgets) -> SPPGame:
    return game([[v] for v in values_column], budgets)


def profile(*alpha) -> PacingProfile:
    return PacingProfile(tuple(Fraction(a) for a in alpha))


def alloc(rows) -> Allocation:
    return Allocation(tuple(tuple(Fraction(v) for v in row) for row in rows))


def candidate(alpha, rows) -> EquilibriumCandidate:
    return EquilibriumCandidate(profile(*alpha), alloc(rows))


def random_fraction(rng: random.Random, denominator: int = 16) -> Fraction:
    return Fraction(rng.randint(0, denominator), denominator)


def random_profile(rng: random.Random, n: int) -> PacingProfile:
    return PacingProfile(tuple(random_fraction(rng) for _ in range(n)))


def random_allocation(rng: random.Random, n: int, m: int) -> Allocation:
    rows = [[Fraction(0)] * m for _ in range(n)]
    for j in range(m):
        weights = [Fraction(rng.randint(0, 4)) for _ in range(n)]
        total = sum(weights)
        if total == 0:
            continue
        full = rng.random() < 0.7
        scale = Fraction(1) if full else Fraction(rng.randint(0, 4), 4)
        for i in range(n):
            rows[i][j] = weights[i] / total * scale
    return Allocation(tuple(tuple(row) for row in rows))


def check_round_invariants(g, alpha_star, x_star, result):
    """Assert the tie-rounding guarantees on a full run trace."""
    n, m = g.n, g.m
    delta = result.delta
    shrink = result.shrink
    assert shrink == (1 - delta) ** (2 ** n)
    assert len(result.steps) <= max(n - 1, 0)
    winners = [[i for i in range(n) if x_star.x[i][j] > 0] for j in range(m)]

    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    edges_so_far = []
    for t, step in enumerate(result.steps, start=1):
        ri, rk = find(step.low_buyer), find(step.high_buyer)
        assert ri != rk, "a merge step must join two distinct components"
        parent[ri] = rk
        edges_so_far.append(((step.low_buyer, step.high_buyer), step.good))
        alpha = step.alpha_after
        for (i, k), j in edges_so_far:
            assert alpha[i] * g.values[i][j] == alpha[k] * g.values[k][j]
        separation = (1 - delta) ** (2 ** n)
        for j in range(m):
            bids = [alpha[a] * g.values[a][j] for a in range(n)]
            for a in range(n):
                for b in range(a + 1, n):
                    if find(a) == find(b) and bids[a] != bids[b]:
                        lo, hi = sorted((bids[a], bids[b]))
                        assert lo < separation * hi
        progress = (1 - delta) ** (2 ** t)
        for j in range(m):
            h = max(alpha[a] * g.values[a][j] for a in range(n))
            for i in winners[j]:
                assert alpha[i] * g.values[i][j] >= progress * h
    final = result.profile.alpha
    for i in range(n):
        assert shrink * alpha_star.alpha[i] <= final[i] <= alpha_star.alpha[i]
    for j in range(m):
        h = max(final[a] * g.values[a][j] for a in range(n))
        for i in winners[j]:
            assert final[i] * g.values[i][j] == h
