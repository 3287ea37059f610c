"""Exact rational linear programming.

Two-phase primal simplex on dense Fraction tableaus with Bland's rule for
both the entering and leaving choices, so it terminates without perturbation
tricks.  All variables are nonnegative; upper bounds are ordinary rows.
Instances serialize to a plain JSON constraint list for cross-solver audits.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .game import fmt_rat, parse_rat


class LPInfeasible(ValueError):
    pass


class LPUnbounded(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[int, Fraction], ...]  # sparse (var, coeff), vars ascending
    sense: str  # "<=", ">=" or "=="
    rhs: Fraction

    def __post_init__(self):
        if self.sense not in ("<=", ">=", "=="):
            raise ValueError(f"bad constraint sense {self.sense!r}")
        object.__setattr__(
            self,
            "coeffs",
            tuple(sorted(((int(v), Fraction(c)) for v, c in self.coeffs))),
        )
        object.__setattr__(self, "rhs", Fraction(self.rhs))

    def value(self, assignment: Sequence[Fraction]) -> Fraction:
        return sum(c * assignment[v] for v, c in self.coeffs)

    def satisfied(self, assignment: Sequence[Fraction]) -> bool:
        lhs = self.value(assignment)
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class LinearProgram:
    """minimize objective . x  subject to constraints, x >= 0."""

    num_vars: int
    objective: tuple[Fraction, ...]
    constraints: tuple[Constraint, ...]
    var_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "objective", tuple(Fraction(c) for c in self.objective))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(self.objective) != self.num_vars:
            raise ValueError("objective length must equal num_vars")
        if self.var_names is not None and len(self.var_names) != self.num_vars:
            raise ValueError("var_names length must equal num_vars")
        for con in self.constraints:
            for v, _ in con.coeffs:
                if not (0 <= v < self.num_vars):
                    raise ValueError(f"constraint references unknown variable {v}")

    def check(self, assignment: Sequence[Fraction]) -> bool:
        if len(assignment) != self.num_vars:
            return False
        if any(a < 0 for a in assignment):
            return False
        return all(con.satisfied(assignment) for con in self.constraints)

    def objective_value(self, assignment: Sequence[Fraction]) -> Fraction:
        return sum(c * a for c, a in zip(self.objective, assignment))

    def to_json(self) -> str:
        doc = {
            "num_vars": self.num_vars,
            "minimize": [fmt_rat(c) for c in self.objective],
            "constraints": [
                {
                    "coeffs": {str(v): fmt_rat(c) for v, c in con.coeffs},
                    "sense": con.sense,
                    "rhs": fmt_rat(con.rhs),
                }
                for con in self.constraints
            ],
        }
        if self.var_names is not None:
            doc["var_names"] = list(self.var_names)
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "LinearProgram":
        doc = json.loads(text)
        constraints = tuple(
            Constraint(
                tuple((int(v), parse_rat(c)) for v, c in con["coeffs"].items()),
                con["sense"],
                parse_rat(con["rhs"]),
            )
            for con in doc["constraints"]
        )
        names = tuple(doc["var_names"]) if "var_names" in doc else None
        return cls(
            int(doc["num_vars"]),
            tuple(parse_rat(c) for c in doc["minimize"]),
            constraints,
            names,
        )


@dataclass(frozen=True)
class LPSolution:
    assignment: tuple[Fraction, ...]
    objective: Fraction
    basis: tuple[int, ...]

    def to_dict(self, names: Optional[Sequence[str]] = None) -> dict:
        values = {
            (names[i] if names else str(i)): fmt_rat(v)
            for i, v in enumerate(self.assignment)
        }
        return {
            "objective": fmt_rat(self.objective),
            "assignment": values,
            "basis": list(self.basis),
        }


def _pivot(tab, basis, row, col):
    piv = tab[row][col]
    inv = 1 / piv
    tab[row] = [entry * inv for entry in tab[row]]
    for r in range(len(tab)):
        if r != row and tab[r][col] != 0:
            factor = tab[r][col]
            pivot_row = tab[row]
            tab[r] = [entry - factor * p for entry, p in zip(tab[r], pivot_row)]
    basis[row] = col


def _run_simplex(tab, basis, cost, allowed):
    """Minimize cost over the tableau; Bland's rule throughout.

    ``cost`` is the reduced-cost row (len = columns incl. rhs slot unused).
    Mutates tab/basis/cost in place; returns on optimality, raises on
    unboundedness.
    """
    m = len(tab)
    width = len(tab[0]) - 1
    while True:
        entering = None
        for j in range(width):
            if allowed[j] and cost[j] < 0:
                entering = j
                break
        if entering is None:
            return
        leaving = None
        best_ratio = None
        for r in range(m):
            a = tab[r][entering]
            if a > 0:
                ratio = tab[r][-1] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[r] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = r
        if leaving is None:
            raise LPUnbounded("objective unbounded below")
        col = entering
        factor = cost[col]
        _pivot(tab, basis, leaving, col)
        if factor != 0:
            pivot_row = tab[leaving]
            for j in range(len(cost)):
                cost[j] -= factor * pivot_row[j]


def solve(lp: LinearProgram) -> LPSolution:
    """Exact optimal basic solution of the LP.

    Two-phase simplex: artificials are driven to zero (else LPInfeasible),
    then the true objective is minimized.  The returned assignment is checked
    against every constraint before being handed back.
    """
    n = lp.num_vars
    rows = []
    senses = []
    for con in lp.constraints:
        dense = [Fraction(0)] * n
        for v, c in con.coeffs:
            dense[v] += c
        rhs = con.rhs
        sense = con.sense
        if rhs < 0:
            dense = [-c for c in dense]
            rhs = -rhs
            sense = {"<=": ">=", ">=": "<=", "==": "=="}[sense]
        rows.append((dense, sense, rhs))
        senses.append(sense)

    m = len(rows)
    slack_count = sum(1 for _, s, _ in rows if s in ("<=", ">="))
    total = n + slack_count + m  # vars + slacks/surplus + artificials
    art_start = n + slack_count
    tab = []
    basis = []
    slack_at = 0
    for r, (dense, sense, rhs) in enumerate(rows):
        row = dense + [Fraction(0)] * (slack_count + m) + [rhs]
        if sense == "<=":
            row[n + slack_at] = Fraction(1)
            slack_at += 1
        elif sense == ">=":
            row[n + slack_at] = Fraction(-1)
            slack_at += 1
        row[art_start + r] = Fraction(1)
        tab.append(row)
        basis.append(art_start + r)

    # phase 1: minimize the sum of artificials
    cost = [Fraction(0)] * (total + 1)
    for j in range(total):
        if j >= art_start:
            cost[j] = Fraction(1)
    for row in tab:  # price out the initial basis
        for j in range(total + 1):
            cost[j] -= row[j]
    allowed = [True] * total
    _run_simplex(tab, basis, cost, allowed)
    phase1 = -cost[-1]
    if phase1 != 0:
        raise LPInfeasible(f"no feasible point (phase-1 optimum {phase1})")

    # evict artificials still sitting in the basis at level zero
    for r in range(m):
        if basis[r] >= art_start:
            col = next(
                (j for j in range(art_start) if tab[r][j] != 0),
                None,
            )
            if col is not None:
                _pivot(tab, basis, r, col)
    keep = [r for r in range(m) if basis[r] < art_start]
    tab = [tab[r] for r in keep]
    basis = [basis[r] for r in keep]
    for j in range(art_start, total):
        allowed[j] = False

    # phase 2: true objective
    cost = [Fraction(0)] * (total + 1)
    for j in range(n):
        cost[j] = lp.objective[j]
    for r, row in enumerate(tab):
        cj = cost[basis[r]]
        if cj != 0:
            for j in range(total + 1):
                cost[j] -= cj * row[j]
    _run_simplex(tab, basis, cost, allowed)

    assignment = [Fraction(0)] * n
    for r, b in enumerate(basis):
        if b < n:
            assignment[b] = tab[r][-1]
    solution = LPSolution(
        tuple(assignment),
        lp.objective_value(assignment),
        tuple(sorted(b for b in basis if b < n)),
    )
    if not lp.check(solution.assignment):
        raise AssertionError("simplex produced an assignment violating the LP")
    return solution
