import itertools
import random
from fractions import Fraction

import pytest

from pacingeq.game import ApproxParams, GameError
from pacingeq.gen import random_game
from pacingeq.sperner import (
    GRID_PITCH_EXPONENT,
    GridPoint,
    SearchExhausted,
    Subsimplex,
    color,
    extract_profile,
    find_panchromatic,
    game_bit_size,
    iter_grid_points,
    iter_subsimplices,
    pitch_bits,
    solve_smooth,
    stop_time,
    subsimplex_neighbors,
    theoretical_pitch,
)
from pacingeq.verify import verify_smooth

from helpers import F, game, one_good, profile


DELTA = F(1, 10)
SYMMETRIC = one_good([1, 1], [10, 10])
TIGHT = one_good([1, 1], [F(1, 4), 10])


class TestTriangulation:
    def test_grid_point_invariants(self):
        with pytest.raises(GameError):
            GridPoint((1, 2), 4)
        with pytest.raises(GameError):
            GridPoint((-1, 5), 4)

    def test_subsimplex_counts(self):
        # K segments in 1-D, K^2 triangles in 2-D
        assert sum(1 for _ in iter_subsimplices(2, 8)) == 8
        assert sum(1 for _ in iter_subsimplices(3, 5)) == 25

    def test_vertices_stay_on_grid_and_close(self):
        for sub in iter_subsimplices(3, 4):
            verts = sub.vertices()
            assert len(verts) == 3
            for v in verts:
                assert sum(v.coords) == 4 and all(c >= 0 for c in v.coords)
            for a, b in itertools.combinations(verts, 2):
                assert max(abs(x - y) for x, y in zip(a.coords, b.coords)) <= 2

    def test_neighbors_share_a_facet(self):
        subs = list(iter_subsimplices(3, 4))
        universe = {tuple(sorted(v.coords for v in s.vertices())): s for s in subs}
        for sub in subs:
            mine = set(v.coords for v in sub.vertices())
            for nb in subsimplex_neighbors(sub):
                theirs = set(v.coords for v in nb.vertices())
                assert len(mine & theirs) == 2
                assert tuple(sorted(theirs)) in universe

    def test_single_buyer_simplex(self):
        subs = list(iter_subsimplices(1, 1))
        assert len(subs) == 1
        assert subs[0].vertices()[0].coords == (1,)


class TestStopTime:
    def test_symmetric_center(self):
        res = stop_time(SYMMETRIC, GridPoint((1, 1), 2), DELTA)
        assert res.t_each == (2, 2)
        assert res.t_star == 2
        assert res.color == 0

    def test_boundary_cap(self):
        res = stop_time(SYMMETRIC, GridPoint((2, 0), 2), DELTA)
        assert res.t_each == (1, None)
        assert res.t_star == 1
        assert res.color == 0

    def test_budget_branch(self):
        res = stop_time(TIGHT, GridPoint((1, 1), 2), DELTA)
        assert res.t_each[0] == 1  # min(2, (1/4)/(1/4))
        assert res.t_star == 1
        assert res.color == 0

    def test_delta_zero_rejected(self):
        with pytest.raises(GameError):
            stop_time(SYMMETRIC, GridPoint((1, 1), 2), Fraction(0))

    def test_color_depends_only_on_direction(self):
        g = random_game(5, 3, 2)
        assert color(g, GridPoint((1, 1, 2), 4), DELTA) == color(
            g, GridPoint((2, 2, 4), 8), DELTA
        )

    def test_corner_gets_own_color(self):
        for i in range(3):
            g = random_game(9, 3, 3)
            coords = tuple(4 if k == i else 0 for k in range(3))
            assert color(g, GridPoint(coords, 4), DELTA) == i


class TestColoringInvariants:
    def test_boundary_coloring_and_stop_bounds(self):
        rng = random.Random(3)
        for trial in range(12):
            n = rng.choice([2, 3])
            g = random_game(rng.randrange(10 ** 6), n, rng.randint(1, 3))
            resolution = 6
            for point in iter_grid_points(n, resolution):
                res = stop_time(g, point, DELTA)
                assert 0 < res.t_star <= n
                for i in range(n):
                    if point.coords[i] == 0:
                        assert res.color != i

    def test_extraction_ranges(self):
        rng = random.Random(4)
        for trial in range(10):
            n = rng.choice([2, 3])
            g = random_game(rng.randrange(10 ** 6), n, rng.randint(1, 3))
            for point in iter_grid_points(n, 5):
                prof, shares = extract_profile(g, point, DELTA)
                assert all(0 <= a <= 1 for a in prof.alpha)
                for j in range(g.m):
                    assert shares.column_sum(j) in (0, 1)


class TestFindPanchromatic:
    # colors of beta = (k/8, 1-k/8) for values (1,1), budgets (1/4, 10),
    # delta = 1/10, derived by direct evaluation of the stop formulas
    TIGHT_COLORS = [1, 1, 1, 1, 0, 0, 0, 0, 0]

    def test_tight_game_edge_colors(self):
        got = [
            color(TIGHT, GridPoint((k, 8 - k), 8), DELTA) for k in range(9)
        ]
        assert got == self.TIGHT_COLORS

    def test_exhaustive_finds_first_bichromatic_edge(self):
        sub = find_panchromatic(TIGHT, DELTA, 8)
        assert sub.base.coords == (3, 5)
        colors = [color(TIGHT, v, DELTA) for v in sub.vertices()]
        assert sorted(colors) == [0, 1]

    def test_single_buyer_trivial(self):
        sub = find_panchromatic(one_good([1], [1]), DELTA, 1)
        assert sub.vertices()[0].coords == (1,)

    def test_exhaustive_always_succeeds_small(self):
        rng = random.Random(12)
        for trial in range(10):
            n = rng.choice([2, 3])
            g = random_game(rng.randrange(10 ** 6), n, rng.randint(1, 3))
            sub = find_panchromatic(g, DELTA, max(n, 5))
            cols = {color(g, v, DELTA) for v in sub.vertices()}
            assert cols == set(range(n))

    def test_restart_walk_deterministic(self):
        a = find_panchromatic(TIGHT, DELTA, 8, strategy="restart-walk", seed=5)
        b = find_panchromatic(TIGHT, DELTA, 8, strategy="restart-walk", seed=5)
        assert a == b
        cols = {color(TIGHT, v, DELTA) for v in a.vertices()}
        assert cols == {0, 1}

    def test_walk_budget_exhaustion_reported(self):
        with pytest.raises(SearchExhausted):
            find_panchromatic(TIGHT, DELTA, 8, strategy="restart-walk", seed=0, max_steps=0)


class TestSolveSmooth:
    def test_single_buyer(self):
        result = solve_smooth(one_good([1], [1]), DELTA, DELTA)
        assert result.candidate.profile.alpha == (1,)
        assert result.report.passed

    def test_two_buyer_tie_game(self):
        g = one_good([2, 1], [F(1, 2), 10])
        result = solve_smooth(g, DELTA, DELTA, initial_resolution=8)
        assert result.report.passed
        alpha1 = result.candidate.profile.alpha[0]
        assert abs(alpha1 - F(1, 2)) <= F(1, 8)

    def test_symmetric_big_budget(self):
        result = solve_smooth(SYMMETRIC, DELTA, DELTA, initial_resolution=8)
        assert result.report.passed
        assert result.candidate.profile.alpha == (1, 1)

    def test_tight_budget_zoom(self):
        result = solve_smooth(TIGHT, DELTA, DELTA, initial_resolution=8)
        assert result.report.passed
        prof = result.candidate.profile
        assert prof.alpha[1] == 1 or prof.alpha[1] >= 1 - DELTA
        again = solve_smooth(TIGHT, DELTA, DELTA, initial_resolution=8)
        assert again.candidate == result.candidate

    def test_verified_result_rechecks(self):
        rng = random.Random(21)
        for trial in range(6):
            n = rng.choice([1, 2, 3])
            g = random_game(rng.randrange(10 ** 6), n, rng.randint(1, 3))
            result = solve_smooth(g, DELTA, DELTA)
            report = verify_smooth(
                g, result.candidate.profile, ApproxParams(DELTA, DELTA)
            )
            assert report.passed


class TestTheoreticalPitch:
    G = one_good([2, 1], [1, 1])

    def test_gamma_linear(self):
        a = theoretical_pitch(self.G, F(1, 4), F(1, 4))
        b = theoretical_pitch(self.G, F(1, 4), F(1, 8))
        assert a == 2 * b

    def test_delta_exponent(self):
        a = theoretical_pitch(self.G, F(1, 4), F(1, 4))
        b = theoretical_pitch(self.G, F(1, 8), F(1, 4))
        assert a == b * 2 ** GRID_PITCH_EXPONENT

    def test_bit_size_blowup(self):
        small = self.G
        big = one_good([2 ** 20 + 1, 1], [1, 1])
        assert game_bit_size(big) > game_bit_size(small)
        assert pitch_bits(big, F(1, 4), F(1, 4)) >= (
            pitch_bits(small, F(1, 4), F(1, 4)) + GRID_PITCH_EXPONENT
        )
