"""Brute-force referees, independent of the main solver paths.

Everything here recomputes results by exhaustive enumeration and refuses
inputs larger than its budget instead of degrading silently.  Tests and
the ``verify`` command route every cross-check through this module; the
only shared machinery is the exact-arithmetic layer and the demand
enumeration of the market model.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import BudgetExceededError, InternalCheckError, InvalidInputError
from .exactnum import LEX_ZERO, LexScalar, lex_sum
from .market import MarketInstance, PiecewisePayment, demand

__all__ = [
    "OracleBudget",
    "brute_minimum_equilibrium_frictionless",
    "brute_p2_optimum",
    "brute_equilibrium_allocations",
]


@dataclass(frozen=True)
class OracleBudget:
    max_lattice_points: int = 200_000
    max_subsets: int = 1 << 16
    max_tuples: int = 1_000_000

    def need_lattice(self, needed: int) -> None:
        if needed > self.max_lattice_points:
            raise BudgetExceededError("max_lattice_points", needed, self.max_lattice_points)

    def need_subsets(self, needed: int) -> None:
        if needed > self.max_subsets:
            raise BudgetExceededError("max_subsets", needed, self.max_subsets)

    def need_tuples(self, needed: int) -> None:
        if needed > self.max_tuples:
            raise BudgetExceededError("max_tuples", needed, self.max_tuples)


DEFAULT_BUDGET = OracleBudget()


def _require_identity_integer(inst: MarketInstance) -> list[list[int]]:
    """Check the frictionless-integer mode and return integer value tables."""
    identity = PiecewisePayment.identity()
    tables = []
    for i, buyer in enumerate(inst.buyers):
        for j, payment in enumerate(buyer.payments):
            if payment != identity:
                raise InvalidInputError(
                    f"buyer {i} good {j} payment is not the identity"
                )
        table = {}
        for bundle, value in buyer.valuation.table.items():
            if value.denominator != 1:
                raise InvalidInputError(
                    f"buyer {i} valuation of {bundle} is not an integer"
                )
            table[bundle] = value.numerator
        tables.append(table)
    return tables


def brute_minimum_equilibrium_frictionless(
    inst: MarketInstance, budget: OracleBudget = DEFAULT_BUDGET
):
    """Componentwise-minimal integer equilibrium price by full grid scan.

    Only valid for identity payments and integer valuations, where the
    minimal equilibrium prices are integral and bounded by the largest
    marginal value.  Scans the whole grid, verifies the sampled equilibrium
    set is closed under componentwise minima, and returns its least element.

    The inner loop runs on plain integers on purpose: the referee shares no
    arithmetic with the exact solver path.
    """
    tables = _require_identity_integer(inst)
    m = inst.m
    supply = inst.supply
    box = inst.box()
    vmax = 0
    for table in tables:
        vmax = max(vmax, max(table.values(), default=0))
    grid_size = (vmax + 1) ** m
    budget.need_lattice(grid_size * len(box))

    subsets = [[j for j in range(m) if mask >> j & 1] for mask in range(1, 1 << m)]
    s_of = [sum(supply[j] for j in sub) for sub in subsets]

    equilibria: list[tuple[int, ...]] = []
    for price in product(range(vmax + 1), repeat=m):
        ok = True
        mins = [0] * len(subsets)
        maxs = [0] * len(subsets)
        for table in tables:
            best = None
            arg: list[tuple[int, ...]] = []
            for x in box:
                u = table[x]
                for j in range(m):
                    if x[j]:
                        u -= price[j] * x[j]
                if best is None or u > best:
                    best, arg = u, [x]
                elif u == best:
                    arg.append(x)
            for t, sub in enumerate(subsets):
                lo = min(sum(x[j] for j in sub) for x in arg)
                hi = max(sum(x[j] for j in sub) for x in arg)
                mins[t] += lo
                maxs[t] += hi
        for t in range(len(subsets)):
            if not (mins[t] <= s_of[t] <= maxs[t]):
                ok = False
                break
        if ok:
            equilibria.append(price)

    if not equilibria:
        raise InternalCheckError("no equilibrium price found on the search grid")
    eq_set = set(equilibria)
    for a in equilibria:
        for b in equilibria:
            meet = tuple(min(aj, bj) for aj, bj in zip(a, b))
            if meet not in eq_set:
                raise InternalCheckError(
                    f"grid equilibrium set is not meet-closed: {a} ^ {b}"
                )
    least = tuple(min(p[j] for p in equilibria) for j in range(m))
    if least not in eq_set:
        raise InternalCheckError("componentwise minimum is not an equilibrium")
    return tuple(Fraction(v) for v in least)


def brute_p2_optimum(rank_min, supply, weights, budget: OracleBudget = DEFAULT_BUDGET):
    """Exhaustive optimum of the two-tier weighted polymatroid sum problem.

    Enumerates every joint placement with per-buyer polymatroid membership
    and column totals within supply; returns ``(value, maximizers)``.
    """
    per_buyer = [oracle.points() for oracle in rank_min]
    total = 1
    for pts in per_buyer:
        total *= len(pts)
    budget.need_tuples(total)

    m = len(supply)
    best: LexScalar | None = None
    arg: list[tuple] = []
    for combo in product(*per_buyer):
        if any(sum(x[j] for x in combo) > supply[j] for j in range(m)):
            continue
        value = lex_sum(
            weights[i][j].scaled(combo[i][j])
            for i in range(len(combo))
            for j in range(m)
            if combo[i][j]
        )
        if best is None or value > best:
            best, arg = value, [combo]
        elif value == best:
            arg.append(combo)
    if best is None:
        best, arg = LEX_ZERO, [tuple(tuple(0 for _ in range(m)) for _ in rank_min)]
    return best, arg


def brute_equilibrium_allocations(
    inst: MarketInstance, price, budget: OracleBudget = DEFAULT_BUDGET
):
    """All demand-respecting allocations that clear the market exactly."""
    families = [sorted(demand(inst, i, price, "full").bundles) for i in range(inst.n)]
    total = 1
    for fam in families:
        total *= len(fam)
    budget.need_tuples(total)
    out = []
    for combo in product(*families):
        if all(
            sum(x[j] for x in combo) == inst.supply[j] for j in range(inst.m)
        ):
            out.append(combo)
    return out
