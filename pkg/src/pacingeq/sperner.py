"""Simplicial search for smooth approximate pacing equilibria.

The unit simplex of bid directions is triangulated Kuhn-style at resolution K.
Each grid point is colored by the first buyer to "stop" when the direction is
scaled up (hitting her multiplier cap or exhausting her budget); the coloring
respects the simplex boundary, so a panchromatic subsimplex always exists and
brackets a point where every buyer stops simultaneously.  Extracting the
scaled profile at such a point and verifying it exactly yields a smooth
approximate equilibrium.

The theoretical grid pitch that guarantees one-shot success is far too small
to enumerate, so the solver refines adaptively: coarse global sweeps locate a
panchromatic subsimplex, then a geometric zoom re-triangulates a shrinking
window around it until some vertex verifies.  Exact verification makes every
accepted answer sound regardless of how it was found.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .game import (
    Allocation,
    ApproxParams,
    EquilibriumCandidate,
    GameError,
    PacingProfile,
    SPPGame,
    second_price,
)
from .verify import VerifyReport, smooth_allocation, verify_smooth


class SearchExhausted(RuntimeError):
    """Panchromatic search or refinement ran out of budget."""

    def __init__(self, message: str, max_resolution: int = 0):
        super().__init__(message)
        self.max_resolution = max_resolution


@dataclass(frozen=True)
class GridPoint:
    """Integer point of the scaled simplex: coords sum to the resolution."""

    coords: tuple[int, ...]
    resolution: int

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        if self.resolution < 1:
            raise GameError("grid resolution must be positive")
        if any(c < 0 for c in self.coords):
            raise GameError(f"negative grid coordinate in {self.coords}")
        if sum(self.coords) != self.resolution:
            raise GameError(
                f"grid point {self.coords} does not sum to resolution {self.resolution}"
            )

    def beta(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, self.resolution) for c in self.coords)


@dataclass(frozen=True)
class Subsimplex:
    """Kuhn subsimplex: a base vertex plus a permutation of unit moves.

    Vertex t is the base after applying moves e[path[0]] - e[path[0]+1], ...
    cumulatively through path[t-1].  Any two vertices are within 2/K in every
    coordinate.
    """

    base: GridPoint
    path: tuple[int, ...]

    def __post_init__(self):
        n = len(self.base.coords)
        if sorted(self.path) != list(range(n - 1)):
            raise GameError(f"path {self.path} is not a permutation of 0..{n - 2}")
        self.vertices()  # validates nonnegativity

    def vertices(self) -> tuple[GridPoint, ...]:
        coords = list(self.base.coords)
        out = [self.base]
        for axis in self.path:
            coords[axis] += 1
            coords[axis + 1] -= 1
            out.append(GridPoint(tuple(coords), self.base.resolution))
        return tuple(out)


@dataclass(frozen=True)
class StopResult:
    """Per-buyer stop times along the scaled direction; None means never."""

    t_each: tuple[Optional[Fraction], ...]
    t_star: Fraction
    color: int


_ZERO = Fraction(0)


def _stop_eval(game: SPPGame, beta, delta: Fraction):
    """One-pass stop analysis at a direction: (StopResult, share rows).

    Avoids intermediate profile/allocation objects; callers on hot paths cache
    the returned pair per grid point.
    """
    n, m = game.n, game.m
    values = game.values
    shares = [[_ZERO] * m for _ in range(n)]
    rates = [_ZERO] * n
    for j in range(m):
        column = [beta[i] * values[i][j] for i in range(n)]
        h = max(column)
        if h == 0:
            continue
        if n == 1:
            price = _ZERO
        else:
            top = h
            second = None
            seen_top = False
            for b in column:
                if b == top and not seen_top:
                    seen_top = True
                elif second is None or b > second:
                    second = b
            price = second
        threshold = (1 - delta) * h
        surpluses = [b - threshold if b > threshold else _ZERO for b in column]
        total = sum(surpluses)
        if total == 0:
            continue
        for i in range(n):
            if surpluses[i]:
                share = surpluses[i] / total
                shares[i][j] = share
                if price:
                    rates[i] += share * price
    t_each: list[Optional[Fraction]] = []
    for i in range(n):
        cap = 1 / beta[i] if beta[i] > 0 else None
        budget = game.budgets[i] / rates[i] if rates[i] > 0 else None
        if cap is None:
            t_each.append(budget)
        elif budget is None:
            t_each.append(cap)
        else:
            t_each.append(min(cap, budget))
    t_star = min(t for t in t_each if t is not None)
    color_index = next(i for i, t in enumerate(t_each) if t == t_star)
    return StopResult(tuple(t_each), t_star, color_index), shares


def stop_time(game: SPPGame, point: GridPoint, delta: Fraction) -> StopResult:
    """First-stop analysis at a grid direction.

    Buyer i stops when the scaled multiplier t*beta_i reaches 1 or when her
    spending under the surplus-share allocation exhausts her budget; the
    allocation itself does not depend on the scale.  The smallest stop time is
    positive and at most n, and the color is the smallest stopping buyer.
    """
    delta = Fraction(delta)
    if not (0 < delta < 1):
        raise GameError("stop_time requires delta in (0, 1)")
    if len(point.coords) != game.n:
        raise GameError(f"grid point has {len(point.coords)} coords, game has n={game.n}")
    return _stop_eval(game, point.beta(), delta)[0]


def color(game: SPPGame, point: GridPoint, delta: Fraction) -> int:
    return stop_time(game, point, delta).color


def extract_profile(
    game: SPPGame, vertex: GridPoint, delta: Fraction
) -> tuple[PacingProfile, Allocation]:
    """Scale the direction by its stop time and take the induced allocation."""
    delta = Fraction(delta)
    if not (0 < delta < 1):
        raise GameError("extract_profile requires delta in (0, 1)")
    beta = vertex.beta()
    result, shares = _stop_eval(game, beta, delta)
    profile = PacingProfile(tuple(result.t_star * b for b in beta))
    return profile, Allocation(tuple(tuple(row) for row in shares))


# ---------------------------------------------------------------------------
# Triangulation enumeration.
# ---------------------------------------------------------------------------

def iter_grid_points(n: int, resolution: int) -> Iterator[GridPoint]:
    """All grid points in lexicographic coordinate order."""
    def rec(prefix, remaining, slots):
        if slots == 1:
            yield prefix + (remaining,)
            return
        for c in range(remaining + 1):
            yield from rec(prefix + (c,), remaining - c, slots - 1)

    for coords in rec((), resolution, n):
        yield GridPoint(coords, resolution)


def _valid_paths(base: tuple[int, ...], n: int) -> Iterator[tuple[int, ...]]:
    for path in itertools.permutations(range(n - 1)):
        coords = list(base)
        ok = True
        for axis in path:
            coords[axis] += 1
            coords[axis + 1] -= 1
            if coords[axis + 1] < 0:
                ok = False
                break
        if ok:
            yield path


def iter_subsimplices(n: int, resolution: int) -> Iterator[Subsimplex]:
    """All Kuhn subsimplices, bases lexicographic then paths lexicographic."""
    if n == 1:
        yield Subsimplex(GridPoint((resolution,), resolution), ())
        return
    for base in iter_grid_points(n, resolution):
        for path in _valid_paths(base.coords, n):
            yield Subsimplex(base, path)


def subsimplex_neighbors(sub: Subsimplex) -> list[Subsimplex]:
    """Subsimplices sharing a facet, via the standard Kuhn pivot rules."""
    n = len(sub.base.coords)
    if n == 1:
        return []
    out = []
    path = sub.path
    base = list(sub.base.coords)
    # drop the base vertex: rotate the move order left, advance the base
    first = path[0]
    coords = base.copy()
    coords[first] += 1
    coords[first + 1] -= 1
    if coords[first + 1] >= 0:
        out.append(_try_subsimplex(coords, path[1:] + (first,), sub.base.resolution))
    # drop the last vertex: rotate right, retreat the base
    last = path[-1]
    coords = base.copy()
    coords[last] -= 1
    coords[last + 1] += 1
    if coords[last] >= 0:
        out.append(_try_subsimplex(coords, (last,) + path[:-1], sub.base.resolution))
    # drop an interior vertex: swap adjacent moves
    for t in range(len(path) - 1):
        swapped = list(path)
        swapped[t], swapped[t + 1] = swapped[t + 1], swapped[t]
        out.append(_try_subsimplex(base, tuple(swapped), sub.base.resolution))
    return [s for s in out if s is not None]


def _try_subsimplex(coords, path, resolution) -> Optional[Subsimplex]:
    try:
        return Subsimplex(GridPoint(tuple(coords), resolution), tuple(path))
    except GameError:
        return None


# ---------------------------------------------------------------------------
# Panchromatic search.
# ---------------------------------------------------------------------------

class _ColorCache:
    """Memoized stop evaluations keyed by (resolution, coords)."""

    def __init__(self, game: SPPGame, delta: Fraction):
        self.game = game
        self.delta = delta
        self.cache: dict = {}

    def eval(self, point: GridPoint):
        key = (point.resolution, point.coords)
        got = self.cache.get(key)
        if got is None:
            got = _stop_eval(self.game, point.beta(), self.delta)
            self.cache[key] = got
        return got

    def __call__(self, point: GridPoint) -> int:
        return self.eval(point)[0].color

    def colors(self, sub: Subsimplex) -> tuple[int, ...]:
        return tuple(self(v) for v in sub.vertices())


def _is_panchromatic(colors: Sequence[int], n: int) -> bool:
    return len(set(colors)) == n


def find_panchromatic(
    game: SPPGame,
    delta: Fraction,
    resolution: int,
    strategy: str = "exhaustive",
    seed: int = 0,
    max_steps: Optional[int] = None,
    jobs: int = 1,
) -> Subsimplex:
    """Locate a subsimplex whose vertices carry all n colors.

    ``exhaustive`` scans subsimplices in deterministic order and cannot fail;
    ``restart-walk`` hill-climbs toward color-diverse neighbors with seeded
    restarts and may exhaust its step budget on coarse grids.
    """
    if resolution < game.n:
        raise GameError(f"resolution {resolution} below buyer count {game.n}")
    painter = _ColorCache(game, Fraction(delta))
    if strategy == "exhaustive":
        if jobs > 1:
            found = _find_panchromatic_parallel(game, delta, resolution, jobs)
            if found is not None:
                return found
        else:
            for sub in iter_subsimplices(game.n, resolution):
                if _is_panchromatic(painter.colors(sub), game.n):
                    return sub
        raise SearchExhausted(
            "no panchromatic subsimplex found by exhaustive scan "
            "(impossible for a valid coloring)",
            resolution,
        )
    if strategy != "restart-walk":
        raise GameError(f"unknown strategy {strategy!r}")

    import random as _random

    rng = _random.Random(seed)
    budget = max_steps if max_steps is not None else 400 * game.n * resolution
    all_subs = None
    steps = 0
    while steps < budget:
        if all_subs is None:
            all_subs = list(iter_subsimplices(game.n, resolution))
        current = all_subs[rng.randrange(len(all_subs))]
        previous = None
        for _ in range(20 * resolution):
            if steps >= budget:
                break
            steps += 1
            cols = painter.colors(current)
            if _is_panchromatic(cols, game.n):
                return current
            options = [s for s in subsimplex_neighbors(current) if s != previous]
            if not options:
                break
            scored = [(len(set(painter.colors(s))), rng.random(), s) for s in options]
            scored.sort(key=lambda item: (-item[0], item[1]))
            previous, current = current, scored[0][2]
    raise SearchExhausted(
        f"restart-walk exhausted {budget} steps at resolution {resolution}",
        resolution,
    )


def _chunk_scan(args):
    game, delta, resolution, bases = args
    painter = _ColorCache(game, delta)
    for rank, base in enumerate(bases):
        for path in _valid_paths(base, game.n):
            sub = Subsimplex(GridPoint(base, resolution), path)
            if _is_panchromatic(painter.colors(sub), game.n):
                return (rank, path, base)
    return None


def _find_panchromatic_parallel(game, delta, resolution, jobs) -> Optional[Subsimplex]:
    import multiprocessing as mp

    bases = [p.coords for p in iter_grid_points(game.n, resolution)]
    chunk = max(1, len(bases) // (jobs * 4))
    tasks = [
        (game, Fraction(delta), resolution, bases[k : k + chunk])
        for k in range(0, len(bases), chunk)
    ]
    with mp.Pool(jobs) as pool:
        for offset, hit in zip(range(0, len(bases), chunk), pool.imap(_chunk_scan, tasks)):
            if hit is not None:
                rank, path, base = hit
                pool.terminate()
                return Subsimplex(GridPoint(base, resolution), path)
    return None


# ---------------------------------------------------------------------------
# Smooth solve with adaptive refinement.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothSolveResult:
    candidate: EquilibriumCandidate
    resolution: int
    subsimplex: Subsimplex
    vertex: GridPoint
    colors: tuple[int, ...]
    report: VerifyReport


def _try_vertices(game, sub, delta, params, painter) -> Optional[SmoothSolveResult]:
    for vertex in sub.vertices():
        result, _ = painter.eval(vertex)
        beta = vertex.beta()
        profile = PacingProfile(tuple(result.t_star * b for b in beta))
        report = verify_smooth(game, profile, params)
        if report.passed:
            return SmoothSolveResult(
                EquilibriumCandidate(profile, report.allocation),
                sub.base.resolution,
                sub,
                vertex,
                painter.colors(sub),
                report,
            )
    return None


def _window_subsimplices(n, resolution, lo, hi, center) -> Iterator[Subsimplex]:
    """Subsimplices with base in the box [lo, hi], nearest the center first."""
    def boxed(prefix, remaining, axis):
        if axis == n - 1:
            if lo[axis] <= remaining <= hi[axis]:
                yield prefix + (remaining,)
            return
        low = max(lo[axis], remaining - sum(hi[axis + 1 :]))
        high = min(hi[axis], remaining)
        for c in range(low, high + 1):
            yield from boxed(prefix + (c,), remaining - c, axis + 1)

    bases = sorted(
        boxed((), resolution, 0),
        key=lambda b: (max(abs(b[i] - center[i]) for i in range(n)), b),
    )
    for base in bases:
        for path in _valid_paths(base, n):
            yield Subsimplex(GridPoint(base, resolution), path)


def _zoom(game, delta, params, sub, levels, factor=4, margin=8):
    """Geometric refinement around a panchromatic subsimplex.

    Returns a verified result, or None when refinement either stalls (the
    bracketed crossing is an artifact of coarse resolution: three colors stop
    meeting once the window shrinks) or exhausts its level budget.
    """
    n = game.n
    current = sub
    resolution = sub.base.resolution
    for _ in range(levels):
        new_resolution = resolution * factor
        verts = [v.coords for v in current.vertices()]
        center = tuple(verts[0][i] * factor for i in range(n))
        painter = _ColorCache(game, delta)
        found = None
        for attempt_margin in (margin, margin * 4):
            lo = tuple(
                max(0, min(v[i] for v in verts) * factor - attempt_margin) for i in range(n)
            )
            hi = tuple(
                min(new_resolution, max(v[i] for v in verts) * factor + attempt_margin)
                for i in range(n)
            )
            for cand in _window_subsimplices(n, new_resolution, lo, hi, center):
                if _is_panchromatic(painter.colors(cand), n):
                    found = cand
                    break
            if found is not None:
                break
        if found is None:
            return None
        hit = _try_vertices(game, found, delta, params, painter)
        if hit is not None:
            return hit
        current, resolution = found, new_resolution
    return None


def solve_smooth(
    game: SPPGame,
    delta: Fraction,
    gamma: Fraction,
    initial_resolution: Optional[int] = None,
    max_levels: int = 90,
    strategy: str = "exhaustive",
    seed: int = 0,
    jobs: int = 1,
) -> SmoothSolveResult:
    """Compute a verified smooth (delta, gamma)-approximate pacing equilibrium.

    Sweeps a divisor-rich ladder of global resolutions; each panchromatic
    subsimplex found is first harvested directly (extract + verify each
    vertex) and then refined by zooming.  Raises SearchExhausted with the
    largest resolution tried when the refinement budget runs out.
    """
    delta, gamma = Fraction(delta), Fraction(gamma)
    if not (0 < delta < 1) or not (0 < gamma < 1):
        raise GameError("solve_smooth requires delta, gamma in (0, 1)")
    params = ApproxParams(delta, gamma)

    if game.n == 1:
        point = GridPoint((1,), 1)
        profile, shares = extract_profile(game, point, delta)
        report = verify_smooth(game, profile, params)
        sub = Subsimplex(point, ())
        return SmoothSolveResult(
            EquilibriumCandidate(profile, report.allocation),
            1, sub, point, (0,), report,
        )

    base = max(game.n, initial_resolution or 8)
    ladder = [base * f for f in (1, 2, 3, 4, 6, 8, 12, 16)]
    max_resolution = 0
    max_branches = 64
    for resolution in ladder:
        max_resolution = max(max_resolution, resolution)
        painter = _ColorCache(game, delta)
        if strategy == "restart-walk":
            try:
                branches = [
                    find_panchromatic(game, delta, resolution, strategy, seed, jobs=jobs)
                ]
            except SearchExhausted:
                continue
        else:
            # collect every bracketing subsimplex: crossings that are artifacts
            # of coarse resolution stall under zoom, so all brackets must be
            # tried before moving to a finer global grid
            branches = []
            for sub in iter_subsimplices(game.n, resolution):
                if _is_panchromatic(painter.colors(sub), game.n):
                    branches.append(sub)
                    if len(branches) >= max_branches:
                        break
        for sub in branches:
            hit = _try_vertices(game, sub, delta, params, painter)
            if hit is not None:
                return hit
        for sub in branches:
            hit = _zoom(game, delta, params, sub, levels=max_levels)
            if hit is not None:
                return hit
    raise SearchExhausted(
        f"no verified smooth approximate equilibrium up to resolution "
        f"{max_resolution} (including zoom refinement)",
        max_resolution,
    )


# ---------------------------------------------------------------------------
# The theoretical grid pitch (documentation-grade; unusable in practice).
# ---------------------------------------------------------------------------

def game_bit_size(game: SPPGame) -> int:
    """Bits to write the game down: all numerators, denominators and counts."""
    total = game.n.bit_length() + game.m.bit_length()
    entries = [v for row in game.values for v in row] + list(game.budgets)
    if game.reserves is not None:
        entries += list(game.reserves)
    for e in entries:
        total += e.numerator.bit_length() + e.denominator.bit_length()
    return total


GRID_PITCH_EXPONENT = 10_000


def theoretical_pitch(game: SPPGame, delta: Fraction, gamma: Fraction) -> Fraction:
    """The grid pitch guaranteeing one-shot extraction success.

    min(B_min, 1) * (gamma/2) / (2^bits / delta)^10000 - astronomically small
    for any real input; exposed so the formula itself can be unit-tested.  The
    practical solver never enumerates at this pitch.
    """
    delta, gamma = Fraction(delta), Fraction(gamma)
    if not (0 < delta < 1) or not (0 < gamma < 1):
        raise GameError("pitch requires delta, gamma in (0, 1)")
    bits = game_bit_size(game)
    blow_up = (Fraction(2 ** bits) / delta) ** GRID_PITCH_EXPONENT
    b_min = min(game.budgets)
    return min(b_min, Fraction(1)) / blow_up * gamma / 2


def pitch_bits(game: SPPGame, delta: Fraction, gamma: Fraction) -> int:
    """Bit length of the reciprocal theoretical pitch."""
    inv = 1 / theoretical_pitch(game, delta, gamma)
    whole = -(-inv.numerator // inv.denominator)
    return whole.bit_length()
