"""From game to exact equilibrium: search, round, then solve a rational LP.

A verified smooth approximate equilibrium is rounded to exact winner ties,
its support structure is frozen into a linear program whose objective is the
remaining pacing slack, and a zero optimum of that LP yields an exact pacing
equilibrium.  When the optimum stays positive the tolerance is halved and the
whole chain reruns; a positive optimum is bounded away from zero, so the loop
terminates for some tolerance on every solvable instance.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional

from .game import (
    Allocation,
    ApproxParams,
    EquilibriumCandidate,
    GameError,
    PacingProfile,
    SPPGame,
    highest_bid,
    reserve_transform,
    second_price,
    strip_auxiliary,
)
from .lp import Constraint, LinearProgram, LPSolution, solve as lp_solve
from .rounding import RoundResult, approx_to_gamma, choose_delta, round_profile
from .sperner import SearchExhausted, SmoothSolveResult, solve_smooth
from .verify import VerifyReport, verify_approx, verify_exact, verify_reserve


class TauPositive(RuntimeError):
    """The slack LP's optimum is positive: retry with a smaller tolerance."""

    def __init__(self, tau: Fraction):
        super().__init__(f"LP optimum tau = {tau} > 0")
        self.tau = tau


class PipelineFailure(RuntimeError):
    """Refinement budget exhausted; carries everything tried so far."""

    def __init__(self, message: str, attempts: tuple):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class SupportInfo:
    """Support structure of an approximate equilibrium with exact ties.

    ``nearly_unpaced`` holds buyers whose multiplier is within gamma of 1;
    ``winners[j]`` the buyers paying a positive amount for good j;
    ``top_index[j]`` the smallest highest bidder and ``runner_up[j]`` the
    smallest distinct index attaining the second-highest bid.
    """

    nearly_unpaced: frozenset[int]
    winners: tuple[frozenset[int], ...]
    top_index: tuple[int, ...]
    runner_up: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "nearly_unpaced": sorted(self.nearly_unpaced),
            "winners": [sorted(w) for w in self.winners],
            "top_index": list(self.top_index),
            "runner_up": list(self.runner_up),
        }


def extract_support(
    game: SPPGame,
    profile: PacingProfile,
    allocation: Allocation,
    gamma: Fraction,
) -> SupportInfo:
    """Read the support structure off a gamma-approximate PE with exact ties."""
    if game.n < 2:
        raise GameError("support extraction needs at least two buyers")
    gamma = Fraction(gamma)
    nearly_unpaced = frozenset(
        i for i in range(game.n) if profile.alpha[i] >= 1 - gamma
    )
    winners = []
    top_index = []
    runner_up = []
    for j in range(game.m):
        price = second_price(game, profile, j)
        winners.append(
            frozenset(i for i in range(game.n) if allocation.x[i][j] * price > 0)
        )
        bids = [profile.alpha[i] * game.values[i][j] for i in range(game.n)]
        h = max(bids)
        s = bids.index(h)
        top_index.append(s)
        rest_max = max(b for i, b in enumerate(bids) if i != s)
        t = next(i for i, b in enumerate(bids) if i != s and b == rest_max)
        runner_up.append(t)
    return SupportInfo(nearly_unpaced, tuple(winners), tuple(top_index), tuple(runner_up))


@dataclass(frozen=True)
class PacingLP:
    """The slack-minimization LP for a fixed support structure.

    Variables are the multipliers, per-(buyer, good) payments, and the slack;
    constraints pin the top and runner-up bid order, force winners to tie the
    top, make payments clear each good at its second bid, and relax budget
    exhaustion / unpaced-ness by the slack only.
    """

    lp: LinearProgram
    game: SPPGame
    support: SupportInfo

    def var_alpha(self, i: int) -> int:
        return i

    def var_pay(self, i: int, j: int) -> int:
        return self.game.n + i * self.game.m + j

    @property
    def var_tau(self) -> int:
        return self.game.n + self.game.n * self.game.m

    def point_from_candidate(
        self, candidate: EquilibriumCandidate, tau: Fraction
    ) -> tuple[Fraction, ...]:
        """Assignment (alpha, payments, tau) induced by a candidate."""
        game = self.game
        values = list(candidate.profile.alpha)
        for i in range(game.n):
            for j in range(game.m):
                price = second_price(game, candidate.profile, j)
                values.append(candidate.allocation.x[i][j] * price)
        values.append(Fraction(tau))
        return tuple(values)


def build_lp(game: SPPGame, support: SupportInfo) -> PacingLP:
    """Emit the support LP, constraint family by constraint family."""
    n, m = game.n, game.m
    nv = n + n * m + 1
    tau = n + n * m

    def pay(i, j):
        return n + i * m + j

    names = [f"alpha_{i}" for i in range(n)]
    names += [f"pay_{i}_{j}" for i in range(n) for j in range(m)]
    names.append("tau")

    cons: list[Constraint] = []
    for i in range(n):
        cons.append(Constraint(((i, Fraction(1)),), "<=", Fraction(1)))
    for j in range(m):
        for i in range(n):
            if i not in support.winners[j]:
                cons.append(Constraint(((pay(i, j), Fraction(1)),), "==", Fraction(0)))
    for j in range(m):
        s = support.top_index[j]
        for k in range(n):
            cons.append(
                Constraint(
                    ((s, game.values[s][j]), (k, -game.values[k][j])), ">=", Fraction(0)
                )
            )
    for j in range(m):
        s, t = support.top_index[j], support.runner_up[j]
        for k in range(n):
            if k != s:
                cons.append(
                    Constraint(
                        ((t, game.values[t][j]), (k, -game.values[k][j])),
                        ">=",
                        Fraction(0),
                    )
                )
    for j in range(m):
        s = support.top_index[j]
        for i in sorted(support.winners[j]):
            cons.append(
                Constraint(
                    ((i, game.values[i][j]), (s, -game.values[s][j])), ">=", Fraction(0)
                )
            )
    for j in range(m):
        t = support.runner_up[j]
        coeffs = [(pay(k, j), Fraction(1)) for k in range(n)]
        coeffs.append((t, -game.values[t][j]))
        cons.append(Constraint(tuple(coeffs), "==", Fraction(0)))
    for i in range(n):
        coeffs = tuple((pay(i, j), Fraction(1)) for j in range(m))
        cons.append(Constraint(coeffs, "<=", game.budgets[i]))
    for i in range(n):
        if i in support.nearly_unpaced:
            cons.append(
                Constraint(((i, Fraction(1)), (tau, Fraction(1))), ">=", Fraction(1))
            )
        else:
            coeffs = [(pay(i, j), Fraction(1)) for j in range(m)]
            coeffs.append((tau, game.budgets[i]))
            cons.append(Constraint(tuple(coeffs), ">=", game.budgets[i]))

    objective = tuple(
        Fraction(1) if v == tau else Fraction(0) for v in range(nv)
    )
    return PacingLP(LinearProgram(nv, objective, tuple(cons), tuple(names)), game, support)


def solve_lp_exact(pacing_lp: PacingLP) -> LPSolution:
    """Exact optimum of the support LP; infeasibility means a corrupted support."""
    return lp_solve(pacing_lp.lp)


def extract_exact(
    game: SPPGame, solution: LPSolution, support: SupportInfo
) -> EquilibriumCandidate:
    """Turn a zero-slack LP solution into an exact pacing equilibrium.

    Payments divided by the second bid give the allocation; a good whose
    second bid is zero goes entirely to its top bidder for free.
    """
    n, m = game.n, game.m
    tau = solution.assignment[n + n * m]
    if tau != 0:
        raise TauPositive(tau)
    profile = PacingProfile(solution.assignment[:n])
    rows = [[Fraction(0)] * m for _ in range(n)]
    for j in range(m):
        price = second_price(game, profile, j)
        if price > 0:
            for i in range(n):
                rows[i][j] = solution.assignment[n + i * m + j] / price
        else:
            rows[support.top_index[j]][j] = Fraction(1)
    return EquilibriumCandidate(profile, Allocation(tuple(tuple(r) for r in rows)))


def sufficient_gamma(game: SPPGame) -> Fraction:
    """Tolerance small enough that any support LP optimum below it is zero.

    Conservative Hadamard-style bound: every basic solution of a support LP
    is a ratio of determinants of the integerized constraint matrix, so a
    positive optimum is at least the reciprocal of the largest determinant.
    Practical only for tiny instances: the bound shrinks geometrically in
    the variable count.
    """
    n, m = game.n, game.m
    entries = [v for row in game.values for v in row] + list(game.budgets)
    scale = lcm(*(e.denominator for e in entries)) if entries else 1
    biggest = max(max(e.numerator * (scale // e.denominator) for e in entries), 1)
    row_l1 = max(2 * biggest, n + biggest, m + biggest, biggest + 1, 2)
    num_vars = n + n * m + 1
    return Fraction(1, (row_l1 + 1) ** num_vars + 1)


@dataclass(frozen=True)
class PipelineAttempt:
    gamma: Fraction
    delta: Fraction
    smooth: SmoothSolveResult
    rounded: EquilibriumCandidate
    round_trace: RoundResult
    support: SupportInfo
    lp: PacingLP
    solution: Optional[LPSolution]
    tau: Optional[Fraction]


@dataclass(frozen=True)
class PipelineResult:
    candidate: EquilibriumCandidate
    report: VerifyReport
    attempts: tuple[PipelineAttempt, ...]
    used_reserve_transform: bool = False
    transformed_candidate: Optional[EquilibriumCandidate] = None


def _ones_allocation(game: SPPGame) -> Allocation:
    return Allocation((tuple(Fraction(1) for _ in range(game.m)),))


def _solve_single_buyer(game: SPPGame) -> PipelineResult:
    candidate = EquilibriumCandidate(
        PacingProfile((Fraction(1),)), _ones_allocation(game)
    )
    report = verify_exact(game, candidate)
    if not report.passed:
        raise AssertionError("single-buyer direct solution failed verification")
    return PipelineResult(candidate, report, ())


def solve_exact_pipeline(
    game: SPPGame,
    initial_gamma: Fraction = Fraction(1, 16),
    max_gamma_halvings: int = 12,
    initial_resolution: Optional[int] = None,
    strategy: str = "exhaustive",
    seed: int = 0,
    jobs: int = 1,
    use_sufficient_gamma: bool = False,
) -> PipelineResult:
    """Compute a verified exact pacing equilibrium.

    Reserve prices are folded into an auxiliary buyer first and stripped from
    the result.  Single-buyer games are solved directly.  Otherwise each
    tolerance attempt runs: smooth search, tie rounding, support extraction,
    slack LP; a zero LP optimum yields the equilibrium, anything else halves
    the tolerance.  Every returned candidate has already passed the exact
    verifier (or the reserve verifier for reserve games).
    """
    if game.has_reserves:
        if all(r == 0 for r in game.reserves):
            inner = solve_exact_pipeline(
                game.without_reserves(), initial_gamma, max_gamma_halvings,
                initial_resolution, strategy, seed, jobs, use_sufficient_gamma,
            )
            report = verify_reserve(game, inner.candidate)
            return PipelineResult(inner.candidate, report, inner.attempts)
        transformed = reserve_transform(game)
        inner = solve_exact_pipeline(
            transformed, initial_gamma, max_gamma_halvings,
            initial_resolution, strategy, seed, jobs, use_sufficient_gamma,
        )
        stripped = strip_auxiliary(inner.candidate)
        report = verify_reserve(game, stripped)
        if not report.passed:
            raise AssertionError("stripped reserve candidate failed verification")
        return PipelineResult(
            stripped, report, inner.attempts,
            used_reserve_transform=True, transformed_candidate=inner.candidate,
        )

    if game.n == 1:
        return _solve_single_buyer(game)

    gamma = Fraction(initial_gamma)
    if use_sufficient_gamma:
        gamma = min(gamma, sufficient_gamma(game))
    attempts: list[PipelineAttempt] = []
    for _ in range(max_gamma_halvings):
        delta = choose_delta(game, gamma)
        try:
            smooth = solve_smooth(
                game, delta, gamma / 2,
                initial_resolution=initial_resolution,
                strategy=strategy, seed=seed, jobs=jobs,
            )
        except SearchExhausted as exc:
            raise PipelineFailure(
                f"smooth search exhausted at gamma={gamma} "
                f"(largest resolution {exc.max_resolution})",
                tuple(attempts),
            ) from exc
        trace = round_profile(
            game, smooth.candidate.profile, smooth.candidate.allocation,
            delta, gamma_half=gamma / 2,
        )
        rounded = EquilibriumCandidate(trace.profile, smooth.candidate.allocation)
        rounded_check = verify_approx(game, rounded, ApproxParams(Fraction(0), gamma))
        if not rounded_check.passed:
            raise AssertionError(
                "rounded profile failed the gamma-approximate check"
            )
        support = extract_support(game, rounded.profile, rounded.allocation, gamma)
        pacing_lp = build_lp(game, support)
        solution = solve_lp_exact(pacing_lp)
        tau = solution.assignment[pacing_lp.var_tau]
        attempts.append(
            PipelineAttempt(
                gamma, delta, smooth, rounded, trace, support, pacing_lp, solution, tau
            )
        )
        if tau == 0:
            candidate = extract_exact(game, solution, support)
            report = verify_exact(game, candidate)
            if not report.passed:
                raise AssertionError(
                    "zero-slack LP solution failed exact verification"
                )
            return PipelineResult(candidate, report, tuple(attempts))
        gamma = gamma / 2
    raise PipelineFailure(
        f"LP slack stayed positive down to gamma={attempts[-1].gamma} "
        f"(last tau={attempts[-1].tau})",
        tuple(attempts),
    )
