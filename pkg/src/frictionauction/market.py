"""Market model: valuations, frictional payments, demand, over/under-demand.

A market instance couples an integral supply vector with buyers, each
carrying an M-natural-concave valuation table over the supply box and one
piecewise-linear payment function per good.  Payments translate a posted
price into what the buyer actually pays per unit, so identical prices can
produce heterogeneous payments across buyers.

Demand sets are computed by exhaustive enumeration of the supply box; they
are the ground truth every other component is validated against.  The
enumeration is exact (all rationals) and the box size is capped at load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .errors import InternalCheckError, InvalidInputError
from .exactnum import Rat, rat, rat_str
from .polymatroid import RankOracle

__all__ = [
    "PiecewisePayment",
    "Valuation",
    "Buyer",
    "MarketInstance",
    "DemandFamily",
    "utility",
    "demand",
    "rank_of_demand",
    "requirement",
    "overdemand",
    "underdemand",
    "minimal_overdemanded_set",
    "minimal_overdemanded_from_ranks",
    "is_equilibrium_price",
    "PriceState",
    "price_state",
    "load_instance",
    "dump_instance",
]

MAX_BOX_POINTS = 200_000


# ---------------------------------------------------------------------------
# payments


@dataclass(frozen=True)
class PiecewisePayment:
    """Continuous, strictly increasing, piecewise-linear payment function.

    ``breakpoints`` lists ``(price, payment)`` pairs starting with (0, 0) in
    strictly ascending price order; beyond the last breakpoint the function
    continues with slope ``tail_slope``.  Continuity is structural: each
    breakpoint value is shared by the adjacent segments.
    """

    breakpoints: tuple[tuple[Fraction, Fraction], ...]
    tail_slope: Fraction

    def __post_init__(self) -> None:
        bps = tuple((rat(p), rat(q)) for p, q in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "tail_slope", rat(self.tail_slope))
        if not bps or bps[0] != (Fraction(0), Fraction(0)):
            raise InvalidInputError("payment breakpoints must start at (0, 0)")
        for (p0, q0), (p1, q1) in zip(bps, bps[1:]):
            if p1 <= p0:
                raise InvalidInputError("breakpoint prices must strictly increase")
            if q1 <= q0:
                raise InvalidInputError("payments must strictly increase")
        if self.tail_slope <= 0:
            raise InvalidInputError("tail slope must be positive")

    @classmethod
    def identity(cls) -> "PiecewisePayment":
        return cls(((Fraction(0), Fraction(0)),), Fraction(1))

    @classmethod
    def linear(cls, slope) -> "PiecewisePayment":
        return cls(((Fraction(0), Fraction(0)),), rat(slope))

    def payment_at(self, price) -> Fraction:
        """Exact evaluation; beyond the last breakpoint uses the tail slope."""
        price = rat(price)
        if price < 0:
            raise InvalidInputError(f"price must be nonnegative, got {price}")
        bps = self.breakpoints
        for (p0, q0), (p1, q1) in zip(bps, bps[1:]):
            if price <= p1:
                return q0 + (q1 - q0) * (price - p0) / (p1 - p0)
        p_last, q_last = bps[-1]
        return q_last + self.tail_slope * (price - p_last)

    def right_slope(self, price) -> Fraction:
        """Slope of the segment to the right of ``price``."""
        price = rat(price)
        if price < 0:
            raise InvalidInputError(f"price must be nonnegative, got {price}")
        bps = self.breakpoints
        for (p0, q0), (p1, q1) in zip(bps, bps[1:]):
            if price < p1:
                return (q1 - q0) / (p1 - p0)
        return self.tail_slope

    def next_breakpoint_after(self, price) -> Fraction | None:
        """Smallest breakpoint price strictly greater than ``price``."""
        price = rat(price)
        for p0, _ in self.breakpoints[1:]:
            if p0 > price:
                return p0
        return None

    def to_json(self) -> dict:
        if self == PiecewisePayment.identity():
            return {"identity": True}
        if len(self.breakpoints) == 1:
            return {"linear": rat_str(self.tail_slope)}
        return {
            "breakpoints": [[rat_str(p), rat_str(q)] for p, q in self.breakpoints],
            "tail_slope": rat_str(self.tail_slope),
        }

    @classmethod
    def from_json(cls, data: dict) -> "PiecewisePayment":
        if data.get("identity"):
            return cls.identity()
        if "linear" in data:
            return cls.linear(rat(data["linear"]))
        bps = tuple((rat(p), rat(q)) for p, q in data["breakpoints"])
        return cls(bps, rat(data["tail_slope"]))


# ---------------------------------------------------------------------------
# valuations


def _box(supply: Sequence[int]) -> list[tuple[int, ...]]:
    return list(product(*(range(s + 1) for s in supply)))


class Valuation:
    """Explicit valuation table over the supply box ``[0, s]``.

    Validated at construction: total over the box, normalized (value 0 at
    the empty bundle), monotone, and M-natural-concave.  The concavity
    check is the exchange axiom verified exhaustively on all bundle pairs,
    so invalid inputs are rejected with a concrete witness.
    """

    __slots__ = ("supply_cap", "table")

    def __init__(self, supply_cap: Sequence[int], table: dict):
        self.supply_cap = tuple(int(s) for s in supply_cap)
        if any(s < 0 for s in self.supply_cap):
            raise InvalidInputError("supply caps must be nonnegative")
        box = _box(self.supply_cap)
        if len(box) > MAX_BOX_POINTS:
            raise InvalidInputError(
                f"supply box has {len(box)} bundles, cap is {MAX_BOX_POINTS}"
            )
        self.table = {}
        for x in box:
            if x not in table:
                raise InvalidInputError(f"valuation table misses bundle {x}")
            self.table[x] = rat(table[x])
        self._validate(box)

    def _validate(self, box: list[tuple[int, ...]]) -> None:
        zero = tuple(0 for _ in self.supply_cap)
        if self.table[zero] != 0:
            raise InvalidInputError("valuation must be 0 at the empty bundle")
        m = len(self.supply_cap)
        for x in box:
            for j in range(m):
                if x[j] < self.supply_cap[j]:
                    up = x[:j] + (x[j] + 1,) + x[j + 1 :]
                    if self.table[up] < self.table[x]:
                        raise InvalidInputError(
                            f"valuation not monotone at {x} -> {up}"
                        )
        for x in box:
            for y in box:
                diff = [x[j] - y[j] for j in range(m)]
                for j in range(m):
                    if diff[j] <= 0:
                        continue
                    if not self._exchange_ok(x, y, j, diff):
                        raise InvalidInputError(
                            "valuation is not M-natural-concave: exchange fails "
                            f"for bundles {x}, {y} at good {j}"
                        )

    def _exchange_ok(self, x, y, j, diff) -> bool:
        lhs = self.table[x] + self.table[y]
        candidates = [k for k in range(len(diff)) if diff[k] < 0] + [None]
        for k in candidates:
            x2 = list(x)
            y2 = list(y)
            x2[j] -= 1
            y2[j] += 1
            if k is not None:
                x2[k] += 1
                y2[k] -= 1
            x2t, y2t = tuple(x2), tuple(y2)
            if x2t in self.table and y2t in self.table:
                if lhs <= self.table[x2t] + self.table[y2t]:
                    return True
        return False

    def value(self, bundle: Sequence[int]) -> Fraction:
        bundle = tuple(bundle)
        if bundle not in self.table:
            raise InvalidInputError(f"bundle {bundle} outside the supply box")
        return self.table[bundle]

    # -- constructors for common valuation classes --

    @classmethod
    def additive(cls, values: Sequence, supply_cap: Sequence[int]) -> "Valuation":
        vals = [rat(v) for v in values]
        table = {
            x: sum((vals[j] * x[j] for j in range(len(vals))), Fraction(0))
            for x in _box(supply_cap)
        }
        return cls(supply_cap, table)

    @classmethod
    def unit_demand(cls, values: Sequence, supply_cap: Sequence[int]) -> "Valuation":
        vals = [rat(v) for v in values]
        table = {}
        for x in _box(supply_cap):
            covered = [vals[j] for j in range(len(vals)) if x[j] >= 1]
            table[x] = max(covered) if covered else Fraction(0)
        return cls(supply_cap, table)

    def to_json(self) -> dict:
        return {
            "bundles": [
                {"x": list(x), "v": rat_str(v)} for x, v in sorted(self.table.items())
            ]
        }


@dataclass(frozen=True)
class Buyer:
    valuation: Valuation
    payments: tuple[PiecewisePayment, ...]


class MarketInstance:
    """Immutable market: goods, integral supply, and at least two buyers."""

    __slots__ = ("m", "n", "supply", "buyers")

    def __init__(self, supply: Sequence[int], buyers: Sequence[Buyer]):
        self.supply = tuple(int(s) for s in supply)
        self.m = len(self.supply)
        self.buyers = tuple(buyers)
        self.n = len(self.buyers)
        if self.n < 2:
            raise InvalidInputError(f"need at least two buyers, got {self.n}")
        if any(s < 0 for s in self.supply):
            raise InvalidInputError("supply must be nonnegative")
        for i, buyer in enumerate(self.buyers):
            if buyer.valuation.supply_cap != self.supply:
                raise InvalidInputError(
                    f"buyer {i} valuation is over a different supply box"
                )
            if len(buyer.payments) != self.m:
                raise InvalidInputError(f"buyer {i} needs {self.m} payment functions")
            # positive tail slopes make every payment unbounded, so a price
            # with q_ij(p) = v_i(unit_j) always exists; validated structurally.

    def box(self) -> list[tuple[int, ...]]:
        return _box(self.supply)

    def zero_price(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(0) for _ in range(self.m))


# ---------------------------------------------------------------------------
# demand


@dataclass(frozen=True)
class DemandFamily:
    """A demand correspondence value: the argmax bundles at one price.

    ``kind`` is ``"full"`` (all optimal bundles), ``"minimal"`` or
    ``"maximal"``.  Minimal and maximal families are M-convex sets and full
    families M-natural-convex; the exchange axiom is verified on all pairs
    at construction.
    """

    bundles: frozenset
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ("full", "minimal", "maximal"):
            raise InvalidInputError(f"unknown demand family kind {self.kind!r}")
        if not self.bundles:
            raise InvalidInputError("demand family cannot be empty")
        witness = _exchange_axiom_witness(
            self.bundles, allow_null=(self.kind == "full")
        )
        if witness is not None:
            raise InvalidInputError(
                f"{self.kind} demand family violates the exchange axiom at {witness}"
            )

    def rank_oracle(self, m: int) -> RankOracle:
        return RankOracle.from_points(tuple(range(m)), sorted(self.bundles))


def _exchange_axiom_witness(bundles: Iterable[tuple[int, ...]], allow_null: bool):
    """Return a violating (x, y, j) triple, or None if the axiom holds.

    For every pair x, y and j with x_j > y_j there must be k with
    x_k < y_k (or the null slot when ``allow_null``) such that both
    x - unit_j + unit_k and y + unit_j - unit_k stay in the family.
    """
    family = set(bundles)
    for x in family:
        for y in family:
            for j in range(len(x)):
                if x[j] <= y[j]:
                    continue
                ks = [k for k in range(len(x)) if x[k] < y[k]]
                if allow_null:
                    ks.append(None)
                ok = False
                for k in ks:
                    x2 = list(x)
                    y2 = list(y)
                    x2[j] -= 1
                    y2[j] += 1
                    if k is not None:
                        x2[k] += 1
                        y2[k] -= 1
                    if tuple(x2) in family and tuple(y2) in family:
                        ok = True
                        break
                if not ok:
                    return (x, y, j)
    return None


def utility(inst: MarketInstance, i: int, bundle, price) -> Fraction:
    """Valuation minus total payment: exact rational."""
    bundle = tuple(bundle)
    buyer = inst.buyers[i]
    total = buyer.valuation.value(bundle)
    for j in range(inst.m):
        if bundle[j]:
            total -= buyer.payments[j].payment_at(price[j]) * bundle[j]
    return total


def demand(inst: MarketInstance, i: int, price, kind: str = "full") -> DemandFamily:
    """Argmax bundles of buyer ``i``, or their minimal / maximal elements."""
    best = None
    arg: list[tuple[int, ...]] = []
    for x in inst.box():
        u = utility(inst, i, x, price)
        if best is None or u > best:
            best, arg = u, [x]
        elif u == best:
            arg.append(x)
    if kind == "full":
        return DemandFamily(frozenset(arg), "full")
    if kind == "minimal":
        picked = [x for x in arg if not any(_strictly_below(y, x) for y in arg)]
        return DemandFamily(frozenset(picked), "minimal")
    if kind == "maximal":
        picked = [x for x in arg if not any(_strictly_below(x, y) for y in arg)]
        return DemandFamily(frozenset(picked), "maximal")
    raise InvalidInputError(f"unknown demand kind {kind!r}")


def _strictly_below(a, b) -> bool:
    return a != b and all(ai <= bi for ai, bi in zip(a, b))


def rank_of_demand(family: DemandFamily, m: int | None = None) -> RankOracle:
    """Rank function ``S -> max x(S)`` of a minimal or maximal demand family."""
    if family.kind == "full":
        raise InternalCheckError("rank oracle requires a minimal or maximal family")
    width = m if m is not None else len(next(iter(family.bundles)))
    return family.rank_oracle(width)


# ---------------------------------------------------------------------------
# over- and under-demand


def requirement(inst: MarketInstance, i: int, subset, price) -> int:
    """Minimum amount buyer ``i`` must take from ``subset`` at ``price``.

    Computed both as a direct minimum over the minimal demand family and
    through the rank-difference formula; the two must agree.
    """
    subset = frozenset(subset)
    if not subset <= set(range(inst.m)):
        raise InvalidInputError(f"subset {sorted(subset)} outside the goods")
    fam = demand(inst, i, price, "minimal")
    direct = min(sum(x[j] for j in subset) for x in fam.bundles)
    oracle = rank_of_demand(fam, inst.m)
    via_rank = oracle.full_rank - oracle.rank(set(range(inst.m)) - subset)
    if direct != via_rank:
        raise InternalCheckError(
            f"requirement mismatch for buyer {i} on {sorted(subset)}: "
            f"{direct} vs {via_rank}"
        )
    return direct


def overdemand(inst: MarketInstance, subset, price) -> int:
    """Aggregate requirement minus supply on ``subset`` (positive = over-demanded)."""
    subset = frozenset(subset)
    total = sum(requirement(inst, i, subset, price) for i in range(inst.n))
    return total - sum(inst.supply[j] for j in subset)


def underdemand(inst: MarketInstance, subset, price) -> int:
    """Aggregate maximal-demand rank minus supply (negative = under-demanded)."""
    subset = frozenset(subset)
    total = 0
    for i in range(inst.n):
        oracle = rank_of_demand(demand(inst, i, price, "maximal"), inst.m)
        total += oracle.rank(subset)
    return total - sum(inst.supply[j] for j in subset)


def minimal_overdemanded_from_ranks(
    rank_min: Sequence[RankOracle], supply: Sequence[int]
) -> frozenset:
    """Unique minimal minimizer of ``s(X) + sum_i rank_i(M \\ X)``.

    Enumerates all subsets, intersects the minimizers (the minimizer family
    of a submodular function is a lattice, hence closed under intersection)
    and checks the intersection is itself a minimizer.
    """
    m = len(supply)
    goods = set(range(m))
    best = None
    argmin: list[frozenset] = []
    for mask in range(1 << m):
        subset = frozenset(j for j in range(m) if mask >> j & 1)
        value = sum(supply[j] for j in subset) + sum(
            o.rank(goods - subset) for o in rank_min
        )
        if best is None or value < best:
            best, argmin = value, [subset]
        elif value == best:
            argmin.append(subset)
    meet = frozenset.intersection(*argmin)
    meet_value = sum(supply[j] for j in meet) + sum(o.rank(goods - meet) for o in rank_min)
    if meet_value != best:
        raise InternalCheckError(
            "minimizer family is not closed under intersection; "
            "the dual objective is not supermodular-compatible"
        )
    return meet


def minimal_overdemanded_set(inst: MarketInstance, price) -> frozenset:
    """The unique minimal maximally over-demanded set of goods at ``price``."""
    ranks = [
        rank_of_demand(demand(inst, i, price, "minimal"), inst.m)
        for i in range(inst.n)
    ]
    return minimal_overdemanded_from_ranks(ranks, inst.supply)


def is_equilibrium_price(inst: MarketInstance, price):
    """Check ``requirement(X) <= s(X) <= max-demand-rank(X)`` for every X.

    Returns ``(True, None)`` or ``(False, (subset, side))`` where ``side``
    is ``"over"`` or ``"under"`` for the first violated inequality.
    """
    rank_min = []
    rank_max = []
    for i in range(inst.n):
        rank_min.append(rank_of_demand(demand(inst, i, price, "minimal"), inst.m))
        rank_max.append(rank_of_demand(demand(inst, i, price, "maximal"), inst.m))
    goods = set(range(inst.m))
    for mask in range(1, 1 << inst.m):
        subset = frozenset(j for j in range(inst.m) if mask >> j & 1)
        s_val = sum(inst.supply[j] for j in subset)
        mu = sum(o.full_rank - o.rank(goods - subset) for o in rank_min)
        if mu > s_val:
            return False, (subset, "over")
        hat = sum(o.rank(subset) for o in rank_max)
        if hat < s_val:
            return False, (subset, "under")
    return True, None


# ---------------------------------------------------------------------------
# per-price snapshot shared by the solver components


@dataclass(frozen=True)
class PriceState:
    """Everything the solver needs at one price, computed once.

    ``full`` / ``minimal`` / ``maximal`` are per-buyer demand families,
    ``rank_min`` / ``rank_max`` the matching rank oracles, ``slopes`` the
    right-derivative matrix of the payments, and ``best_utility`` the
    per-buyer optimal utility.
    """

    price: tuple
    full: tuple
    minimal: tuple
    maximal: tuple
    rank_min: tuple
    rank_max: tuple
    slopes: tuple
    best_utility: tuple


def price_state(inst: MarketInstance, price) -> PriceState:
    price = tuple(rat(p) for p in price)
    full, minimal, maximal, rank_min, rank_max, best = [], [], [], [], [], []
    for i in range(inst.n):
        fam = demand(inst, i, price, "full")
        mins = frozenset(
            x for x in fam.bundles if not any(_strictly_below(y, x) for y in fam.bundles)
        )
        maxs = frozenset(
            x for x in fam.bundles if not any(_strictly_below(x, y) for y in fam.bundles)
        )
        fmin = DemandFamily(mins, "minimal")
        fmax = DemandFamily(maxs, "maximal")
        full.append(fam)
        minimal.append(fmin)
        maximal.append(fmax)
        rank_min.append(fmin.rank_oracle(inst.m))
        rank_max.append(fmax.rank_oracle(inst.m))
        best.append(utility(inst, i, next(iter(fam.bundles)), price))
    slopes = tuple(
        tuple(inst.buyers[i].payments[j].right_slope(price[j]) for j in range(inst.m))
        for i in range(inst.n)
    )
    return PriceState(
        price=price,
        full=tuple(full),
        minimal=tuple(minimal),
        maximal=tuple(maximal),
        rank_min=tuple(rank_min),
        rank_max=tuple(rank_max),
        slopes=slopes,
        best_utility=tuple(best),
    )


# ---------------------------------------------------------------------------
# JSON schema


def _valuation_from_json(data: dict, supply) -> Valuation:
    if "additive" in data:
        return Valuation.additive([rat(v) for v in data["additive"]], supply)
    if "unit_demand" in data:
        return Valuation.unit_demand([rat(v) for v in data["unit_demand"]], supply)
    if "bundles" in data:
        table = {tuple(entry["x"]): rat(entry["v"]) for entry in data["bundles"]}
        return Valuation(supply, table)
    raise InvalidInputError("valuation must give bundles, additive or unit_demand")


def load_instance(data) -> MarketInstance:
    """Build a market from parsed JSON (or a path / JSON string)."""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError:
            with open(data, "r", encoding="utf-8") as fh:
                data = json.load(fh)
    supply = [int(s) for s in data["supply"]]
    if data.get("goods") is not None and int(data["goods"]) != len(supply):
        raise InvalidInputError("goods count disagrees with the supply vector")
    buyers = []
    for spec in data["buyers"]:
        valuation = _valuation_from_json(spec["valuation"], supply)
        payments = tuple(PiecewisePayment.from_json(p) for p in spec["payments"])
        buyers.append(Buyer(valuation, payments))
    return MarketInstance(supply, buyers)


def dump_instance(inst: MarketInstance) -> dict:
    return {
        "goods": inst.m,
        "supply": list(inst.supply),
        "buyers": [
            {
                "valuation": buyer.valuation.to_json(),
                "payments": [p.to_json() for p in buyer.payments],
            }
            for buyer in inst.buyers
        ],
    }
