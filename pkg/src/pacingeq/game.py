"""Second-price pacing game model and exact-rational primitives.

All quantities are `fractions.Fraction`; every operation here is pure and
exact, so bid ties and budget boundaries can be tested with `==`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence


class GameError(ValueError):
    """Raised when a game, profile or allocation violates a model invariant."""


def rat(value) -> Fraction:
    """Coerce ints, strings like '3/4', and Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise GameError(f"floats are not accepted as exact rationals: {value!r}")
    return Fraction(value)


def fmt_rat(value: Fraction) -> str:
    """Canonical 'p/q' form (denominator always explicit and positive)."""
    return f"{value.numerator}/{value.denominator}"


def parse_rat(text: str, where: str = "value") -> Fraction:
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise GameError(f"malformed rational for {where}: {text!r}") from exc
    return f


def _freeze_matrix(rows: Iterable[Iterable]) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(rat(v) for v in row) for row in rows)


def _freeze_vector(entries: Iterable) -> tuple[Fraction, ...]:
    return tuple(rat(v) for v in entries)


@dataclass(frozen=True)
class SPPGame:
    """n buyers bidding on m goods sold by independent second-price auctions.

    ``values[i][j]`` is buyer i's value for good j (>= 0), ``budgets[i]`` > 0.
    ``reserves`` is either None (no reserve prices) or an m-vector >= 0.
    Every good must be positively valued by some buyer and every buyer must
    positively value some good.
    """

    n: int
    m: int
    values: tuple[tuple[Fraction, ...], ...]
    budgets: tuple[Fraction, ...]
    reserves: Optional[tuple[Fraction, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze_matrix(self.values))
        object.__setattr__(self, "budgets", _freeze_vector(self.budgets))
        if self.reserves is not None:
            object.__setattr__(self, "reserves", _freeze_vector(self.reserves))
        self._validate()

    def _validate(self):
        if self.n < 1 or self.m < 1:
            raise GameError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if len(self.values) != self.n:
            raise GameError(f"values has {len(self.values)} rows, expected n={self.n}")
        for i, row in enumerate(self.values):
            if len(row) != self.m:
                raise GameError(f"values row {i} has {len(row)} entries, expected m={self.m}")
            for j, v in enumerate(row):
                if v < 0:
                    raise GameError(f"value v[{i}][{j}]={v} is negative")
        if len(self.budgets) != self.n:
            raise GameError(f"budgets has {len(self.budgets)} entries, expected n={self.n}")
        for i, b in enumerate(self.budgets):
            if b <= 0:
                raise GameError(f"budget B[{i}]={b} must be positive")
        if self.reserves is not None:
            if len(self.reserves) != self.m:
                raise GameError(
                    f"reserves has {len(self.reserves)} entries, expected m={self.m}"
                )
            for j, r in enumerate(self.reserves):
                if r < 0:
                    raise GameError(f"reserve r[{j}]={r} is negative")
        for j in range(self.m):
            if all(self.values[i][j] == 0 for i in range(self.n)):
                raise GameError(f"good {j} has value 0 for every buyer")
        for i in range(self.n):
            if all(v == 0 for v in self.values[i]):
                raise GameError(f"buyer {i} has value 0 for every good")

    @property
    def has_reserves(self) -> bool:
        return self.reserves is not None

    def reserve(self, j: int) -> Fraction:
        return self.reserves[j] if self.reserves is not None else Fraction(0)

    def without_reserves(self) -> "SPPGame":
        return SPPGame(self.n, self.m, self.values, self.budgets, None)


@dataclass(frozen=True)
class PacingProfile:
    """Per-buyer bid-shading multipliers, each in [0, 1]."""

    alpha: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", _freeze_vector(self.alpha))
        for i, a in enumerate(self.alpha):
            if not (0 <= a <= 1):
                raise GameError(f"multiplier alpha[{i}]={a} outside [0, 1]")

    @property
    def n(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class Allocation:
    """Fractional allocation; column sums (per good) may not exceed 1."""

    x: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "x", _freeze_matrix(self.x))
        if not self.x:
            raise GameError("allocation must have at least one row")
        m = len(self.x[0])
        for i, row in enumerate(self.x):
            if len(row) != m:
                raise GameError(f"allocation row {i} has {len(row)} entries, expected {m}")
            for j, v in enumerate(row):
                if not (0 <= v <= 1):
                    raise GameError(f"allocation x[{i}][{j}]={v} outside [0, 1]")
        for j in range(m):
            total = sum(row[j] for row in self.x)
            if total > 1:
                raise GameError(f"good {j} over-allocated: column sum {total} > 1")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def m(self) -> int:
        return len(self.x[0])

    def column_sum(self, j: int) -> Fraction:
        return sum(row[j] for row in self.x)


@dataclass(frozen=True)
class EquilibriumCandidate:
    profile: PacingProfile
    allocation: Allocation

    def __post_init__(self):
        if self.profile.n != self.allocation.n:
            raise GameError(
                f"profile has {self.profile.n} buyers, allocation has {self.allocation.n}"
            )


@dataclass(frozen=True)
class ApproxParams:
    """Relaxation parameters: delta for near-highest winners, gamma for pacing slack."""

    delta: Fraction
    gamma: Fraction

    def __post_init__(self):
        object.__setattr__(self, "delta", rat(self.delta))
        object.__setattr__(self, "gamma", rat(self.gamma))
        if not (0 <= self.delta < 1):
            raise GameError(f"delta={self.delta} outside [0, 1)")
        if not (0 <= self.gamma < 1):
            raise GameError(f"gamma={self.gamma} outside [0, 1)")

    @classmethod
    def exact(cls) -> "ApproxParams":
        return cls(Fraction(0), Fraction(0))


def _check_dims(game: SPPGame, profile: PacingProfile, allocation: Allocation = None):
    if profile.n != game.n:
        raise GameError(f"profile has {profile.n} entries, game has n={game.n}")
    if allocation is not None:
        if allocation.n != game.n or allocation.m != game.m:
            raise GameError(
                f"allocation is {allocation.n}x{allocation.m}, game is {game.n}x{game.m}"
            )


def highest_bid(game: SPPGame, profile: PacingProfile, good: int) -> Fraction:
    """h_j: the largest paced bid alpha_i * v[i][j] on the good."""
    _check_dims(game, profile)
    if not (0 <= good < game.m):
        raise GameError(f"good index {good} out of range [0, {game.m})")
    return max(profile.alpha[i] * game.values[i][good] for i in range(game.n))


def second_price(game: SPPGame, profile: PacingProfile, good: int) -> Fraction:
    """Second-largest paced bid, with multiplicity (a tied top yields the top).

    A single-buyer game has no competing bid, so the price is 0.
    """
    _check_dims(game, profile)
    if not (0 <= good < game.m):
        raise GameError(f"good index {good} out of range [0, {game.m})")
    if game.n == 1:
        return Fraction(0)
    bids = sorted(
        (profile.alpha[i] * game.values[i][good] for i in range(game.n)), reverse=True
    )
    return bids[1]


def winning_threshold(game: SPPGame, profile: PacingProfile, good: int) -> Fraction:
    """H_j = max(h_j, r_j): the bid a buyer must match to win the good."""
    return max(highest_bid(game, profile, good), game.reserve(good))


def good_price(game: SPPGame, profile: PacingProfile, good: int) -> Fraction:
    """Price paid per unit of the good: P_j = max(p_j, r_j)."""
    return max(second_price(game, profile, good), game.reserve(good))


def expenditure(
    game: SPPGame, profile: PacingProfile, allocation: Allocation, buyer: int
) -> Fraction:
    """Total payment of the buyer: sum_j x[i][j] * price_j (reserve-aware)."""
    _check_dims(game, profile, allocation)
    if not (0 <= buyer < game.n):
        raise GameError(f"buyer index {buyer} out of range [0, {game.n})")
    return sum(
        allocation.x[buyer][j] * good_price(game, profile, j) for j in range(game.m)
    )


def reserve_transform(game: SPPGame) -> SPPGame:
    """Fold reserve prices into an auxiliary buyer bidding the reserves.

    The auxiliary buyer (index n) values good j at r_j and gets a budget large
    enough (sum of all values and reserves) that she is never paced in any
    equilibrium of the transformed game.  Rejects games whose reserves are all
    zero: the auxiliary buyer would value nothing, so there is nothing to fold.
    """
    if game.reserves is None:
        raise GameError("reserve_transform requires a game with a reserves vector")
    if all(r == 0 for r in game.reserves):
        raise GameError("all reserves are zero; drop the reserves vector instead")
    aux_budget = sum(v for row in game.values for v in row) + sum(game.reserves)
    values = game.values + (tuple(game.reserves),)
    budgets = game.budgets + (aux_budget,)
    return SPPGame(game.n + 1, game.m, values, budgets, None)


def strip_auxiliary(candidate: EquilibriumCandidate) -> EquilibriumCandidate:
    """Drop the auxiliary buyer added by reserve_transform.

    Fractions won by the auxiliary buyer are interpreted as unsold.  The
    auxiliary multiplier must be exactly 1; anything else means the candidate
    was not an equilibrium of the transformed game.
    """
    alpha = candidate.profile.alpha
    if len(alpha) < 2:
        raise GameError("candidate has no auxiliary buyer to strip")
    if alpha[-1] != 1:
        raise GameError(
            f"auxiliary multiplier is {alpha[-1]}, expected exactly 1; "
            "input is not an equilibrium of the transformed game"
        )
    return EquilibriumCandidate(
        PacingProfile(alpha[:-1]), Allocation(candidate.allocation.x[:-1])
    )


# ---------------------------------------------------------------------------
# Serialization.  Games and equilibria are JSON documents whose rationals are
# canonical "p/q" strings; round trips are bit-exact.
# ---------------------------------------------------------------------------

def game_to_dict(game: SPPGame) -> dict:
    doc = {
        "n": game.n,
        "m": game.m,
        "values": [[fmt_rat(v) for v in row] for row in game.values],
        "budgets": [fmt_rat(b) for b in game.budgets],
    }
    if game.reserves is not None:
        doc["reserves"] = [fmt_rat(r) for r in game.reserves]
    return doc


def game_from_dict(doc: dict) -> SPPGame:
    try:
        n = int(doc["n"])
        m = int(doc["m"])
        raw_values = doc["values"]
        raw_budgets = doc["budgets"]
    except (KeyError, TypeError) as exc:
        raise GameError(f"game document missing field: {exc}") from exc
    if len(raw_values) != n:
        raise GameError(f"values has {len(raw_values)} rows, expected n={n}")
    values = []
    for i, row in enumerate(raw_values):
        if len(row) != m:
            raise GameError(f"values row {i} has {len(row)} entries, expected m={m}")
        values.append([parse_rat(v, f"value[{i}][{j}]") for j, v in enumerate(row)])
    budgets = [parse_rat(b, f"budget[{i}]") for i, b in enumerate(raw_budgets)]
    reserves = None
    if doc.get("reserves") is not None:
        reserves = [parse_rat(r, f"reserve[{j}]") for j, r in enumerate(doc["reserves"])]
    return SPPGame(n, m, values, budgets, reserves)


def serialize_game(game: SPPGame) -> str:
    return json.dumps(game_to_dict(game), indent=2) + "\n"


def parse_game(text: str) -> SPPGame:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameError(f"game file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GameError("game file must be a JSON object")
    return game_from_dict(doc)


def candidate_to_dict(candidate: EquilibriumCandidate) -> dict:
    return {
        "alpha": [fmt_rat(a) for a in candidate.profile.alpha],
        "x": [[fmt_rat(v) for v in row] for row in candidate.allocation.x],
    }


def candidate_from_dict(doc: dict) -> EquilibriumCandidate:
    try:
        raw_alpha = doc["alpha"]
        raw_x = doc["x"]
    except (KeyError, TypeError) as exc:
        raise GameError(f"equilibrium document missing field: {exc}") from exc
    alpha = [parse_rat(a, f"alpha[{i}]") for i, a in enumerate(raw_alpha)]
    x = [
        [parse_rat(v, f"x[{i}][{j}]") for j, v in enumerate(row)]
        for i, row in enumerate(raw_x)
    ]
    return EquilibriumCandidate(PacingProfile(alpha), Allocation(x))


def serialize_candidate(candidate: EquilibriumCandidate) -> str:
    return json.dumps(candidate_to_dict(candidate), indent=2) + "\n"


def parse_candidate(text: str) -> EquilibriumCandidate:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameError(f"equilibrium file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GameError("equilibrium file must be a JSON object")
    return candidate_from_dict(doc)
