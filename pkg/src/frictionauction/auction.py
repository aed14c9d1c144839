"""The ascending auction: directional price updates between exact events.

Starting from the zero price, each iteration computes the over-demanded
support and a stable update direction (module :mod:`.direction`), then
advances the price along the direction to the first *event*: either a
payment-function breakpoint on a rising good, or a price at which some
buyer becomes indifferent to a bundle outside their surviving demand set.
Both families of candidate steps are found by exact ray analysis, so the
trace is fully deterministic and rational.

At every candidate point the full state is recomputed; a candidate at
which nothing observable changed (same support, slopes, over-demand, dual
value and minimal duals) is not an event and the walk simply continues
along the same direction.  The auction terminates when the support is
empty; the final price then clears the market.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .direction import DemandSideData, Direction, DirectionSolution, compute_direction
from .errors import InternalCheckError, ModelViolationError, NonterminationError
from .exactnum import LexScalar, rat_str
from .market import MarketInstance, PriceState, price_state

__all__ = [
    "EVENT_KINDS",
    "IterationRecord",
    "AuctionTrace",
    "SolverState",
    "next_event",
    "first_change_step",
    "classify_event",
    "run_auction",
    "default_iteration_cap",
]

EVENT_KINDS = (
    "slope_breakpoint",
    "demand_change",
    "overdemand_change",
    "dual_value_increase",
    "dual_minimal_increase",
    "termination",
)


@dataclass(frozen=True)
class SolverState:
    """One direction solve plus the ambient market snapshot."""

    state: PriceState
    solution: DirectionSolution
    overdemand: int  # over-demand of the support at this state's price

    @property
    def price(self):
        return self.state.price

    @property
    def support(self) -> frozenset:
        return self.solution.support

    @property
    def direction(self) -> Direction:
        return self.solution.direction


@dataclass(frozen=True)
class IterationRecord:
    price_before: tuple
    support: tuple
    direction: tuple
    duals: dict
    dual_value: LexScalar
    step: Fraction
    event: str
    potential: int

    def to_json(self) -> dict:
        return {
            "price_before": [rat_str(p) for p in self.price_before],
            "support": list(self.support),
            "direction": [rat_str(d) for d in self.direction],
            "duals": {str(j): z.to_json() for j, z in sorted(self.duals.items())},
            "dual_value": self.dual_value.to_json(),
            "step": rat_str(self.step),
            "event": self.event,
            "potential": self.potential,
        }


@dataclass(frozen=True)
class AuctionTrace:
    iterations: tuple
    final_price: tuple

    def to_json(self) -> dict:
        return {
            "iterations": [record.to_json() for record in self.iterations],
            "final_price": [rat_str(p) for p in self.final_price],
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def event_counts(self) -> dict:
        counts: dict[str, int] = {}
        for record in self.iterations:
            counts[record.event] = counts.get(record.event, 0) + 1
        return counts


def _overdemand_of(state: PriceState, support: frozenset, supply) -> int:
    goods = set(range(len(supply)))
    total = sum(
        o.full_rank - o.rank(goods - support) for o in state.rank_min
    )
    return total - sum(supply[j] for j in support)


def _potential(m: int, overdemand: int, support: frozenset) -> int:
    return (m + 1) * overdemand - len(support)


def next_event(inst: MarketInstance, state: PriceState, direction: Direction):
    """Exact step to the first event along ``direction`` from ``state``.

    Returns ``(step, trigger)`` with trigger ``"slope_breakpoint"`` or
    ``"demand_change"``; breakpoints win ties.  Raises when no event lies
    ahead, which on a nonempty over-demanded support would contradict the
    payment model (prices must eventually choke demand).
    """
    step, trigger = first_change_step(inst, state, direction)
    if step is None:
        raise ModelViolationError(
            "no event ahead on a nonempty support; the payment model "
            "should make every over-demanded good eventually unattractive"
        )
    return step, trigger


def first_change_step(inst: MarketInstance, state: PriceState, direction: Direction):
    """First candidate step along the ray, or ``(None, None)`` if none.

    The candidates are:

    * the nearest payment breakpoint of any buyer on a rising good, and
    * for each buyer, the nearest price at which a bundle outside the
      surviving demand set ties in utility.  Along the ray the utility of
      bundle ``x`` falls at rate ``sum_j slope_ij * d_j * x_j``; survivors
      are the current optima with the smallest rate, and a bundle with a
      smaller rate catches up after ``(gap in utility) / (gap in rate)``.
    """
    if not direction.support:
        raise InternalCheckError("event search needs a direction with support")
    p = state.price
    d = direction.d

    best_break: Fraction | None = None
    for i in range(inst.n):
        for j in direction.support:
            bp = inst.buyers[i].payments[j].next_breakpoint_after(p[j])
            if bp is not None:
                step = (bp - p[j]) / d[j]
                if best_break is None or step < best_break:
                    best_break = step

    best_tie: Fraction | None = None
    for i in range(inst.n):
        slopes = state.slopes[i]

        def rate(x) -> Fraction:
            return sum(
                (slopes[j] * d[j] * x[j] for j in direction.support if x[j]),
                Fraction(0),
            )

        u_best = state.best_utility[i]
        rate_min = min(rate(x) for x in state.full[i].bundles)
        table = inst.buyers[i].valuation.table
        pay = [inst.buyers[i].payments[j].payment_at(p[j]) for j in range(inst.m)]
        for x, value in table.items():
            if x in state.full[i].bundles:
                continue
            r = rate(x)
            if r >= rate_min:
                continue
            u = value
            for j in range(inst.m):
                if x[j]:
                    u -= pay[j] * x[j]
            step = (u_best - u) / (rate_min - r)
            if best_tie is None or step < best_tie:
                best_tie = step

    if best_break is None and best_tie is None:
        return None, None
    if best_break is not None and (best_tie is None or best_break <= best_tie):
        return best_break, "slope_breakpoint"
    return best_tie, "demand_change"


def classify_event(before: SolverState, after: SolverState) -> str:
    """Name the first observable change between consecutive solver states.

    Precedence: support change, slope change, strict drop of the support's
    over-demand, strict increase of the dual optimum, strict increase of
    the minimal dual prices.  Raises when nothing changed: the caller must
    only classify genuine events.
    """
    if after.support != before.support:
        return "overdemand_change"
    if after.state.slopes != before.state.slopes:
        return "slope_breakpoint"
    if after.overdemand < before.overdemand:
        return "demand_change"
    if after.solution.dual_value > before.solution.dual_value:
        return "dual_value_increase"
    zb, za = before.solution.duals, after.solution.duals
    if all(za[j] >= zb[j] for j in za) and any(za[j] > zb[j] for j in za):
        return "dual_minimal_increase"
    raise InternalCheckError(
        "event classification found no observable change between states"
    )


def _solver_state(inst: MarketInstance, price) -> SolverState:
    state = price_state(inst, price)
    solution = compute_direction(DemandSideData.from_state(inst, state))
    od = _overdemand_of(state, solution.support, inst.supply)
    return SolverState(state=state, solution=solution, overdemand=od)


def _states_differ(before: SolverState, after: SolverState) -> bool:
    return (
        after.support != before.support
        or after.state.slopes != before.state.slopes
        or after.overdemand != before.overdemand
        or after.solution.dual_value != before.solution.dual_value
        or after.solution.duals != before.solution.duals
    )


def default_iteration_cap(inst: MarketInstance) -> int:
    breakpoints = sum(
        len(p.breakpoints) - 1 for buyer in inst.buyers for p in buyer.payments
    )
    return 10 * (sum(inst.supply) + 1) * (inst.m + 1) * inst.n * (breakpoints + 1)


def run_auction(inst: MarketInstance, iteration_cap: int | None = None) -> AuctionTrace:
    """Run the ascending auction from the zero price to the clearing price.

    Raises :class:`NonterminationError` with the partial trace if the
    safety cap is hit (finiteness is a theorem; hitting the cap means a
    bug, and it must surface as a diagnosis instead of a hang).
    """
    cap = iteration_cap if iteration_cap is not None else default_iteration_cap(inst)
    records: list[IterationRecord] = []
    current = _solver_state(inst, inst.zero_price())
    guard = 0

    while True:
        guard += 1
        if guard > cap:
            raise NonterminationError(
                f"auction exceeded the iteration cap of {cap}",
                trace=AuctionTrace(tuple(records), current.price),
            )
        if not current.support:
            records.append(
                IterationRecord(
                    price_before=current.price,
                    support=(),
                    direction=tuple(Fraction(0) for _ in range(inst.m)),
                    duals={},
                    dual_value=current.solution.dual_value,
                    step=Fraction(0),
                    event="termination",
                    potential=0,
                )
            )
            return AuctionTrace(tuple(records), current.price)

        accumulated = Fraction(0)
        price = current.price
        while True:
            probe_state = price_state(inst, price) if accumulated else current.state
            step, _ = next_event(inst, probe_state, current.direction)
            accumulated += step
            price = tuple(
                price[j] + step * current.direction.d[j] for j in range(inst.m)
            )
            nxt = _solver_state(inst, price)
            if _states_differ(current, nxt):
                break
            # nothing observable changed: not an event, keep walking the ray
        event = classify_event(current, nxt)
        records.append(
            IterationRecord(
                price_before=current.price,
                support=tuple(sorted(current.support)),
                direction=current.direction.d,
                duals=dict(current.solution.duals),
                dual_value=current.solution.dual_value,
                step=accumulated,
                event=event,
                potential=_potential(inst.m, current.overdemand, current.support),
            )
        )
        current = nxt
