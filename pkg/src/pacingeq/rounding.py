"""Round an approximate equilibrium into one whose winners are exactly tied.

Winners that bid strictly below the top of a good they win get their whole
connected component of buyers scaled up until the bid ties exactly; a final
uniform shrink restores multipliers to [0, 1] while keeping every tie.  The
shading parameter delta is chosen so small that distinct products of value
ratios cannot collide, which bounds the loop at n-1 merges.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .game import (
    Allocation,
    ApproxParams,
    EquilibriumCandidate,
    GameError,
    PacingProfile,
    SPPGame,
)
from .verify import VerifyReport, verify_approx

MAX_BUYERS_FOR_ROUNDING = 16  # the shrink factor has ~2^n * bits(delta) bits


class RoundingPrecondition(ValueError):
    """Input was not an approximate equilibrium of the promised quality."""

    def __init__(self, message: str, report: Optional[VerifyReport] = None):
        super().__init__(message)
        self.report = report


class ComponentGraph:
    """Union-find over buyers plus the labeled merge edges."""

    def __init__(self, n: int):
        self.n = n
        self.parent = list(range(n))
        self.edges: list[tuple[tuple[int, int], int]] = []

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def same_component(self, i: int, k: int) -> bool:
        return self.find(i) == self.find(k)

    def component(self, i: int) -> list[int]:
        root = self.find(i)
        return [a for a in range(self.n) if self.find(a) == root]

    def add_edge(self, i: int, k: int, good: int):
        if self.same_component(i, k):
            raise RoundingPrecondition(
                f"edge ({i},{k}) labeled {good} would not merge two components"
            )
        self.parent[self.find(i)] = self.find(k)
        self.edges.append(((i, k), good))
        if len(self.edges) > self.n - 1:
            raise RoundingPrecondition("more than n-1 merges requested")


def choose_delta(game: SPPGame, gamma: Fraction) -> Fraction:
    """Shading parameter making the tie-rounding loop well-defined.

    Returns delta = 1/2^N such that (1-delta)^(2^n) exceeds both 1 - gamma/2
    and the reciprocal of every product of at most 2n value ratios that lies
    above 1.  The second condition is established through a denominator bound:
    any such product above 1 exceeds 1 by at least 1/M^(4n) where M bounds the
    numerators and denominators of the values.  Both conditions are then
    re-checked with exact arithmetic.
    """
    gamma = Fraction(gamma)
    if not (0 < gamma < 1):
        raise GameError("choose_delta requires gamma in (0, 1)")
    if game.n > MAX_BUYERS_FOR_ROUNDING:
        raise GameError(
            f"rounding supports at most {MAX_BUYERS_FOR_ROUNDING} buyers "
            f"(shrink factor needs ~2^n * bits(delta) bits), got n={game.n}"
        )
    gamma_half = gamma / 2
    m_bound = 2
    for row in game.values:
        for v in row:
            if v > 0:
                m_bound = max(m_bound, v.numerator, v.denominator)
    eps0 = Fraction(1, m_bound ** (4 * game.n))
    target = min(gamma_half, eps0 / 2)
    big_n = game.n + 2 + (target.denominator // target.numerator).bit_length()
    while True:
        delta = Fraction(1, 2 ** big_n)
        power = (1 - delta) ** (2 ** game.n)
        if power > 1 - gamma_half and power * (1 + eps0) > 1:
            return delta
        big_n += 4


@dataclass(frozen=True)
class RoundStep:
    good: int
    low_buyer: int
    high_buyer: int
    scale: Fraction
    alpha_after: tuple[Fraction, ...]


@dataclass(frozen=True)
class RoundResult:
    profile: PacingProfile
    steps: tuple[RoundStep, ...]
    shrink: Fraction
    alpha_before_shrink: tuple[Fraction, ...]
    delta: Fraction
    edges: tuple[tuple[tuple[int, int], int], ...]

    def to_dict(self) -> dict:
        from .game import fmt_rat

        return {
            "delta": fmt_rat(self.delta),
            "shrink": fmt_rat(self.shrink),
            "steps": [
                {
                    "good": s.good,
                    "low_buyer": s.low_buyer,
                    "high_buyer": s.high_buyer,
                    "scale": fmt_rat(s.scale),
                    "alpha_after": [fmt_rat(a) for a in s.alpha_after],
                }
                for s in self.steps
            ],
            "alpha_before_shrink": [fmt_rat(a) for a in self.alpha_before_shrink],
            "alpha": [fmt_rat(a) for a in self.profile.alpha],
        }


def round_profile(
    game: SPPGame,
    alpha_star: PacingProfile,
    x_star: Allocation,
    delta: Fraction,
    gamma_half: Optional[Fraction] = None,
) -> RoundResult:
    """Run the tie-rounding loop and the final uniform shrink.

    Winner sets are fixed from the input allocation throughout.  When
    ``gamma_half`` is given the full approximate-equilibrium precondition is
    checked first; otherwise only the winner-proximity condition, which the
    loop's termination depends on, is enforced.
    """
    delta = Fraction(delta)
    if not (0 <= delta < 1):
        raise GameError("delta must lie in [0, 1)")
    if game.n > MAX_BUYERS_FOR_ROUNDING:
        raise GameError(f"rounding supports at most {MAX_BUYERS_FOR_ROUNDING} buyers")
    candidate = EquilibriumCandidate(alpha_star, x_star)
    if gamma_half is not None:
        report = verify_approx(game, candidate, ApproxParams(delta, gamma_half))
        if not report.passed:
            raise RoundingPrecondition(
                "input is not an approximate equilibrium at the promised "
                f"(delta, gamma/2) = ({delta}, {gamma_half})",
                report,
            )
    else:
        report = verify_approx(game, candidate, ApproxParams(delta, Fraction(0)))
        bad = [v for v in report.violations if v.condition == "a"]
        if bad:
            raise RoundingPrecondition(
                f"{len(bad)} winners bid below (1-delta) of the top", report
            )

    n, m = game.n, game.m
    alpha = list(alpha_star.alpha)
    winners = [
        [i for i in range(n) if x_star.x[i][j] > 0] for j in range(m)
    ]
    graph = ComponentGraph(n)
    steps: list[RoundStep] = []
    while True:
        pick = None
        for j in range(m):
            h = max(alpha[k] * game.values[k][j] for k in range(n))
            for i in winners[j]:
                if alpha[i] * game.values[i][j] < h:
                    k = next(
                        a for a in range(n) if alpha[a] * game.values[a][j] == h
                    )
                    pick = (j, i, k, h)
                    break
            if pick is not None:
                break
        if pick is None:
            break
        if len(steps) >= n - 1:
            raise RoundingPrecondition(
                "tie violations persist after n-1 merges; input was not an "
                "approximate equilibrium at this delta"
            )
        j, i, k, h = pick
        scale = h / (alpha[i] * game.values[i][j])
        for a in graph.component(i):
            alpha[a] *= scale
        graph.add_edge(i, k, j)
        steps.append(RoundStep(j, i, k, scale, tuple(alpha)))

    shrink = (1 - delta) ** (2 ** n)
    profile = PacingProfile(tuple(shrink * a for a in alpha))
    return RoundResult(
        profile, tuple(steps), shrink, tuple(alpha), delta, tuple(graph.edges)
    )


def approx_to_gamma(
    game: SPPGame,
    candidate: EquilibriumCandidate,
    delta: Fraction,
    gamma: Fraction,
) -> EquilibriumCandidate:
    """Turn a (delta, gamma/2)-approximate PE into a gamma-approximate PE.

    The rounded multipliers keep the input allocation; the result has exact
    winner ties, i.e. it passes the approximate check with zero bid slack.
    """
    gamma = Fraction(gamma)
    if not (0 < gamma < 1):
        raise GameError("approx_to_gamma requires gamma in (0, 1)")
    result = round_profile(
        game, candidate.profile, candidate.allocation, delta, gamma_half=gamma / 2
    )
    rounded = EquilibriumCandidate(result.profile, candidate.allocation)
    report = verify_approx(game, rounded, ApproxParams(Fraction(0), gamma))
    if not report.passed:
        raise RoundingPrecondition(
            "rounded output failed the gamma-approximate check; the input "
            "cannot have been a (delta, gamma/2)-approximate equilibrium",
            report,
        )
    return rounded
