from fractions import Fraction

import pytest

from pacingeq.lp import Constraint, LinearProgram, LPInfeasible, LPUnbounded, solve

from oracles import lp_by_vertex_enumeration, random_boxed_lp


def C(coeffs, sense, rhs):
    return Constraint(tuple(coeffs), sense, Fraction(rhs))


class TestSimplexBasics:
    def test_lower_bound_active(self):
        lp = LinearProgram(1, (Fraction(1),), (C([(0, 1)], ">=", 0),))
        assert solve(lp).objective == 0

    def test_two_lower_bounds(self):
        lp = LinearProgram(
            1,
            (Fraction(1),),
            (C([(0, 1)], ">=", Fraction(1, 3)), C([(0, 1)], ">=", Fraction(1, 4))),
        )
        assert solve(lp).objective == Fraction(1, 3)

    def test_equality_and_budget(self):
        # minimize x+y st x+2y == 4, x <= 1  ->  x=0, y=2
        lp = LinearProgram(
            2,
            (Fraction(1), Fraction(1)),
            (C([(0, 1), (1, 2)], "==", 4), C([(0, 1)], "<=", 1)),
        )
        sol = solve(lp)
        assert sol.objective == 2
        assert sol.assignment == (0, 2)

    def test_infeasible(self):
        lp = LinearProgram(1, (Fraction(0),), (C([(0, 1)], "<=", -1),))
        with pytest.raises(LPInfeasible):
            solve(lp)

    def test_unbounded(self):
        lp = LinearProgram(1, (Fraction(-1),), (C([(0, 1)], ">=", 0),))
        with pytest.raises(LPUnbounded):
            solve(lp)

    def test_beale_cycling_instance(self):
        # classic degenerate instance that cycles without an anti-cycling rule
        lp = LinearProgram(
            4,
            (Fraction(-3, 4), Fraction(150), Fraction(-1, 50), Fraction(6)),
            (
                C([(0, Fraction(1, 4)), (1, -60), (2, Fraction(-1, 25)), (3, 9)], "<=", 0),
                C([(0, Fraction(1, 2)), (1, -90), (2, Fraction(-1, 50)), (3, 3)], "<=", 0),
                C([(2, 1)], "<=", 1),
            ),
        )
        sol = solve(lp)
        status, expected = lp_by_vertex_enumeration(lp)
        assert status == "optimal"
        assert sol.objective == expected == Fraction(-1, 20)

    def test_solution_is_checked(self):
        lp = LinearProgram(
            2,
            (Fraction(-1), Fraction(-2)),
            (C([(0, 1), (1, 1)], "<=", 3), C([(0, 1), (1, -1)], ">=", -1)),
        )
        sol = solve(lp)
        assert lp.check(sol.assignment)
        assert sol.objective == lp.objective_value(sol.assignment)


class TestSerialization:
    def test_round_trip(self):
        lp = random_boxed_lp(5)
        again = LinearProgram.from_json(lp.to_json())
        assert again == lp


class TestVertexOracleAgreement:
    def test_random_instances(self):
        for seed in range(40):
            lp = random_boxed_lp(seed)
            status, expected = lp_by_vertex_enumeration(lp)
            if status == "infeasible":
                with pytest.raises(LPInfeasible):
                    solve(lp)
            else:
                assert solve(lp).objective == expected
