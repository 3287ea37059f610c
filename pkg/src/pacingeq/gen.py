"""Seeded random instance generation."""
from __future__ import annotations

import random
from fractions import Fraction

from .game import SPPGame

DEFAULT_SEED = 20240801


def random_game(
    seed: int,
    n: int,
    m: int,
    max_value: int = 8,
    max_budget: int = 8,
    denominator: int = 1,
    with_reserves: bool = False,
) -> SPPGame:
    """Random game satisfying the model invariants, deterministic per seed.

    Values are drawn uniformly from {0, 1/d, ..., max_value} (d = denominator),
    then zero rows/columns are repaired with a positive entry.  Budgets are
    uniform in (0, max_budget] on the same grid.
    """
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    if max_value < 1 or max_budget < 1 or denominator < 1:
        raise ValueError("max_value, max_budget and denominator must be >= 1")
    rng = random.Random(seed)
    values = [
        [Fraction(rng.randint(0, max_value * denominator), denominator) for _ in range(m)]
        for _ in range(n)
    ]
    for i in range(n):
        if all(v == 0 for v in values[i]):
            j = rng.randrange(m)
            values[i][j] = Fraction(rng.randint(1, max_value * denominator), denominator)
    for j in range(m):
        if all(values[i][j] == 0 for i in range(n)):
            i = rng.randrange(n)
            values[i][j] = Fraction(rng.randint(1, max_value * denominator), denominator)
    budgets = [
        Fraction(rng.randint(1, max_budget * denominator), denominator) for _ in range(n)
    ]
    reserves = None
    if with_reserves:
        reserves = [
            Fraction(rng.randint(0, max_value * denominator), denominator)
            for _ in range(m)
        ]
        if all(r == 0 for r in reserves):
            reserves[rng.randrange(m)] = Fraction(
                rng.randint(1, max_value * denominator), denominator
            )
    return SPPGame(n, m, values, budgets, reserves)
