"""Exact toolkit for second-price pacing games.

Verify exact / approximate / smooth pacing equilibria, compute exact
equilibria through a simplicial-search -> rounding -> rational-LP pipeline,
and build bimatrix hardness gadgets with their Nash extraction maps.
"""

from .game import (
    Allocation,
    ApproxParams,
    EquilibriumCandidate,
    GameError,
    PacingProfile,
    SPPGame,
    expenditure,
    good_price,
    highest_bid,
    parse_candidate,
    parse_game,
    reserve_transform,
    second_price,
    serialize_candidate,
    serialize_game,
    strip_auxiliary,
    winning_threshold,
)
from .verify import (
    VerifyReport,
    Violation,
    oracle_grid_search,
    smooth_allocation,
    verify_approx,
    verify_exact,
    verify_reserve,
    verify_smooth,
    verify_wsne,
)

__all__ = [
    "Allocation",
    "ApproxParams",
    "EquilibriumCandidate",
    "GameError",
    "PacingProfile",
    "SPPGame",
    "VerifyReport",
    "Violation",
    "expenditure",
    "good_price",
    "highest_bid",
    "oracle_grid_search",
    "parse_candidate",
    "parse_game",
    "reserve_transform",
    "second_price",
    "serialize_candidate",
    "serialize_game",
    "smooth_allocation",
    "strip_auxiliary",
    "verify_approx",
    "verify_exact",
    "verify_reserve",
    "verify_smooth",
    "verify_wsne",
    "winning_threshold",
]
