"""Structural property checks used by the test suite and the verify command.

Each check returns ``(ok, detail)`` where ``detail`` carries the first
counterexample found.  They re-derive everything from demand enumeration,
so they are usable both as invariants along auction traces and as
standalone referees for randomly generated instances.
"""

from __future__ import annotations

from fractions import Fraction

from .auction import AuctionTrace
from .market import MarketInstance, demand, price_state, rank_of_demand

__all__ = [
    "check_demand_monotonicity",
    "check_rank_requirement_monotonicity",
    "check_single_swap_property",
    "check_no_underdemand",
    "check_trace_shape",
]


def _frozen_goods(p, p2):
    return [j for j in range(len(p)) if p[j] == p2[j]]


def check_demand_monotonicity(inst: MarketInstance, p, p2):
    """Substitutes monotonicity of extreme demand between ``p <= p2``.

    In both directions, every extreme bundle at one price must be matched
    at the other by a bundle that is no smaller on frozen goods (picked
    from the lower price side) and no larger in total.
    """
    if not all(a <= b for a, b in zip(p, p2)):
        raise ValueError("price pair must be ordered componentwise")
    frozen = _frozen_goods(p, p2)
    for kind in ("minimal", "maximal"):
        for i in range(inst.n):
            low = demand(inst, i, p, kind).bundles
            high = demand(inst, i, p2, kind).bundles
            for x in low:
                if not any(
                    all(x[j] <= y[j] for j in frozen) and sum(x) >= sum(y)
                    for y in high
                ):
                    return False, (kind, i, "low-to-high", x)
            for y in high:
                if not any(
                    all(x[j] <= y[j] for j in frozen) and sum(x) >= sum(y)
                    for x in low
                ):
                    return False, (kind, i, "high-to-low", y)
    return True, None


def check_rank_requirement_monotonicity(inst: MarketInstance, p, p2):
    """Monotonicity of ranks and requirements on frozen goods as prices rise.

    On any set of frozen goods: minimal and maximal demand ranks may only
    grow, the requirement of the frozen set may only grow, the requirement
    of its complement may only shrink, and when the latter stays equal the
    relevant ranks must stay equal too.
    """
    if not all(a <= b for a, b in zip(p, p2)):
        raise ValueError("price pair must be ordered componentwise")
    frozen = set(_frozen_goods(p, p2))
    goods = set(range(inst.m))
    for i in range(inst.n):
        lo_min = rank_of_demand(demand(inst, i, p, "minimal"), inst.m)
        hi_min = rank_of_demand(demand(inst, i, p2, "minimal"), inst.m)
        lo_max = rank_of_demand(demand(inst, i, p, "maximal"), inst.m)
        hi_max = rank_of_demand(demand(inst, i, p2, "maximal"), inst.m)
        for mask in range(1 << inst.m):
            sub = {j for j in range(inst.m) if mask >> j & 1}
            if not sub <= frozen:
                continue
            if lo_min.rank(sub) > hi_min.rank(sub):
                return False, (i, sorted(sub), "minimal rank dropped")
            if lo_max.rank(sub) > hi_max.rank(sub):
                return False, (i, sorted(sub), "maximal rank dropped")
            mu_lo = lo_min.full_rank - lo_min.rank(goods - sub)
            mu_hi = hi_min.full_rank - hi_min.rank(goods - sub)
            if mu_lo > mu_hi:
                return False, (i, sorted(sub), "frozen requirement dropped")
            co_lo = lo_min.full_rank - lo_min.rank(sub)
            co_hi = hi_min.full_rank - hi_min.rank(sub)
            if co_lo < co_hi:
                return False, (i, sorted(sub), "complement requirement grew")
            if co_lo == co_hi:
                if lo_min.full_rank != hi_min.full_rank or lo_min.rank(
                    sub
                ) != hi_min.rank(sub):
                    return False, (i, sorted(sub), "equality without rank equality")
    return True, None


def check_single_swap_property(inst: MarketInstance, p):
    """Any demanded bundle taking more than required from a set can shed one
    unit of the set (possibly swapping it outside) and stay demanded."""
    for i in range(inst.n):
        family = demand(inst, i, p, "full").bundles
        oracle = rank_of_demand(demand(inst, i, p, "minimal"), inst.m)
        goods = set(range(inst.m))
        for mask in range(1, 1 << inst.m):
            sub = [j for j in range(inst.m) if mask >> j & 1]
            mu = oracle.full_rank - oracle.rank(goods - set(sub))
            for x in family:
                if sum(x[j] for j in sub) <= mu:
                    continue
                found = False
                for j in sub:
                    if x[j] == 0:
                        continue
                    shed = list(x)
                    shed[j] -= 1
                    if tuple(shed) in family:
                        found = True
                        break
                    for j2 in goods - set(sub):
                        swap = list(shed)
                        swap[j2] += 1
                        if tuple(swap) in family:
                            found = True
                            break
                    if found:
                        break
                if not found:
                    return False, (i, sorted(sub), x)
    return True, None


def check_no_underdemand(inst: MarketInstance, p):
    """No set of goods may be collectively under-demanded at ``p``."""
    state = price_state(inst, p)
    for mask in range(1, 1 << inst.m):
        sub = frozenset(j for j in range(inst.m) if mask >> j & 1)
        total = sum(o.rank(sub) for o in state.rank_max)
        if total < sum(inst.supply[j] for j in sub):
            return False, sorted(sub)
    return True, None


def check_trace_shape(inst: MarketInstance, trace: AuctionTrace):
    """Shape invariants of a finished trace.

    Prices never decrease, goods outside the support are frozen within an
    iteration, the integer potential is positive until termination and
    strictly decreases across support changes, and the number of support
    changes stays within the aggregate bound.
    """
    prev_price = inst.zero_price()
    segment_potentials = []
    current_segment = None
    support_changes = 0
    for record in trace.iterations:
        if any(a > b for a, b in zip(prev_price, record.price_before)):
            return False, ("price decreased", record.price_before)
        if record.event == "termination":
            if record.potential != 0:
                return False, ("nonzero potential at termination",)
            continue
        if record.potential <= 0:
            return False, ("potential not positive mid-run", record.potential)
        for j in range(inst.m):
            frozen = j not in record.support
            if frozen and record.direction[j] != 0:
                return False, ("direction leaks outside the support", j)
        if current_segment is None:
            current_segment = record.potential
            segment_potentials.append(record.potential)
        if record.event == "overdemand_change":
            support_changes += 1
            current_segment = None
        prev_price = tuple(
            p + record.step * d for p, d in zip(record.price_before, record.direction)
        )
    segment_potentials.append(0)
    for a, b in zip(segment_potentials, segment_potentials[1:]):
        if not b < a:
            return False, ("potential did not strictly decrease", (a, b))
    bound = sum(inst.supply) * (inst.m + 1) * inst.n
    if support_changes > bound:
        return False, ("too many support changes", support_changes)
    return True, None
