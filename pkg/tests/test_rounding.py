from fractions import Fraction

import pytest

from pacingeq.game import ApproxParams, EquilibriumCandidate, GameError
from pacingeq.rounding import (
    ComponentGraph,
    RoundingPrecondition,
    approx_to_gamma,
    choose_delta,
    round_profile,
)
from pacingeq.verify import verify_approx, verify_exact

from helpers import F, alloc, check_round_invariants, game, one_good, profile


class TestChooseDelta:
    def test_first_condition_exact(self):
        g = one_good([2, 1], [1, 1])
        for gamma in (F(1, 2), F(1, 8), F(1, 64)):
            delta = choose_delta(g, gamma)
            assert (1 - delta) ** (2 ** g.n) > 1 - gamma / 2

    def test_ratio_condition_exact(self):
        g = game([[3, 5], [7, 2]], [1, 1])
        delta = choose_delta(g, F(1, 4))
        m_bound = 7
        eps0 = Fraction(1, m_bound ** (4 * g.n))
        assert (1 - delta) ** (2 ** g.n) * (1 + eps0) > 1

    def test_all_ones_arithmetic(self):
        # with unit values any delta with (1-delta)^4 > 1/2 works at gamma'=1/2
        assert Fraction(15, 16) ** 4 == Fraction(50625, 65536) > Fraction(1, 2)
        g = one_good([1, 1], [1, 1])
        delta = choose_delta(g, F(63, 64))
        assert (1 - delta) ** 4 > Fraction(1, 2)

    def test_monotone_in_gamma(self):
        g = game([[3, 5], [7, 2]], [1, 1])
        assert choose_delta(g, F(1, 64)) <= choose_delta(g, F(1, 4))

    def test_power_of_two(self):
        g = one_good([2, 1], [1, 1])
        delta = choose_delta(g, F(1, 8))
        assert delta.numerator == 1
        assert delta.denominator & (delta.denominator - 1) == 0

    def test_buyer_cap(self):
        g = one_good([1] * 17, [1] * 17)
        with pytest.raises(GameError):
            choose_delta(g, F(1, 2))


class TestComponentGraph:
    def test_merges_and_limits(self):
        cg = ComponentGraph(3)
        cg.add_edge(0, 1, 0)
        assert cg.same_component(0, 1)
        with pytest.raises(RoundingPrecondition):
            cg.add_edge(1, 0, 1)
        cg.add_edge(2, 0, 1)
        assert sorted(cg.component(1)) == [0, 1, 2]


class TestRoundProfile:
    def test_already_tied_shrinks_only(self):
        g = one_good([1, 1], [F(9, 20), F(9, 20)])
        delta = F(1, 8)
        result = round_profile(g, profile(1, 1), alloc([[F(1, 2)], [F(1, 2)]]), delta)
        assert result.steps == ()
        assert result.profile.alpha == (F(2401, 4096), F(2401, 4096))

    def test_hand_traced_example(self):
        g = one_good([1, 1], [F(9, 20), F(9, 20)])
        delta = F(1, 8)
        a_star = profile(1, F(9, 10))
        x_star = alloc([[F(1, 2)], [F(1, 2)]])
        result = round_profile(g, a_star, x_star, delta)
        assert len(result.steps) == 1
        step = result.steps[0]
        assert (step.good, step.low_buyer, step.high_buyer) == (0, 1, 0)
        assert step.scale == F(10, 9)
        assert result.alpha_before_shrink == (1, 1)
        assert result.profile.alpha == (F(2401, 4096), F(2401, 4096))
        check_round_invariants(g, a_star, x_star, result)

    def test_two_step_chain(self):
        g = game([[2, 0], [1, 1], [0, 3]], [F(1, 2), 1, F(1, 2)])
        gamma = F(1, 8)
        delta = choose_delta(g, gamma)
        eps1, eps2 = delta / 2, delta / 4
        a_star = profile(F(1, 2), 1 - eps1, (1 - eps2) / 3)
        x_star = alloc([[F(1, 2), 0], [F(1, 2), F(1, 2)], [0, F(1, 2)]])
        assert verify_approx(
            g, EquilibriumCandidate(a_star, x_star), ApproxParams(delta, gamma / 2)
        ).passed
        result = round_profile(g, a_star, x_star, delta, gamma_half=gamma / 2)
        assert len(result.steps) == 2
        assert result.alpha_before_shrink == (F(1, 2), 1, F(1, 3))
        check_round_invariants(g, a_star, x_star, result)

    def test_precondition_rejected(self):
        g = one_good([2, 1], [1, 1])
        # buyer 2 wins while bidding half the top: not delta-close for small delta
        with pytest.raises(RoundingPrecondition):
            round_profile(
                g, profile(1, 1), alloc([[F(1, 2)], [F(1, 2)]]), F(1, 16)
            )


class TestApproxToGamma:
    def test_output_passes_zero_delta_check(self):
        g = game([[2, 0], [1, 1], [0, 3]], [F(1, 2), 1, F(1, 2)])
        gamma = F(1, 8)
        delta = choose_delta(g, gamma)
        a_star = profile(F(1, 2), 1 - delta / 2, (1 - delta / 4) / 3)
        x_star = alloc([[F(1, 2), 0], [F(1, 2), F(1, 2)], [0, F(1, 2)]])
        rounded = approx_to_gamma(
            g, EquilibriumCandidate(a_star, x_star), delta, gamma
        )
        assert verify_approx(g, rounded, ApproxParams(F(0), gamma)).passed
        assert rounded.allocation == x_star

    def test_exact_input_stays_tied(self):
        g = one_good([1, 1], [F(1, 2), F(1, 2)])
        gamma = F(7, 8)
        delta = choose_delta(g, gamma)
        c = EquilibriumCandidate(profile(1, 1), alloc([[F(1, 2)], [F(1, 2)]]))
        assert verify_exact(g, c).passed
        rounded = approx_to_gamma(g, c, delta, gamma)
        assert rounded.profile.alpha[0] == rounded.profile.alpha[1]
        assert verify_approx(g, rounded, ApproxParams(F(0), gamma)).passed

    def test_bad_input_reported(self):
        g = one_good([2, 1], [F(1, 100), 1])
        gamma = F(1, 8)
        delta = choose_delta(g, gamma)
        c = EquilibriumCandidate(profile(1, 1), alloc([[1], [0]]))
        with pytest.raises(RoundingPrecondition):
            approx_to_gamma(g, c, delta, gamma)
