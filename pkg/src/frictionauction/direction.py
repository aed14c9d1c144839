"""Price-update direction computation.

Given the per-buyer minimal demand data at the current price, this module
finds the pair ``(support, direction)``: the unique minimal maximally
over-demanded set of goods, and a rational direction supported on it whose
small price advances keep that set invariant (the stability property the
auction loop relies on).

The computation follows the dual route end to end:

1. Solve the two-tier weighted polymatroid sum problem by successive
   cheapest augmenting paths (primary tier: place as many units as supply
   and demand admit; secondary tier: prefer units with the smallest
   marginal payment, encoded in :class:`~.exactnum.LexScalar` weights).
2. Extend the optimal placement to full minimal-demand bundles, build the
   unit-copy exchange graph, and read the over-demanded support off
   reachability to oversold goods (cross-checked against subset
   enumeration of the dual objective).
3. Solve the induced unit-demand assignment market on the support and
   extract its pointwise-minimal equilibrium prices; their second tier is
   the direction.

Every solve validates strong duality, the unit primary tier of the dual
prices, and the stability certificate of the returned direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

from .errors import InternalCheckError, InvalidInputError, NotSeparableError
from .exactnum import LEX_ZERO, LexScalar, lex_from_slope, lex_sum, rat
from .market import (
    DemandFamily,
    MarketInstance,
    PriceState,
    minimal_overdemanded_from_ranks,
    price_state,
)
from .polymatroid import RankOracle, greedy_max

__all__ = [
    "BuyerDemandData",
    "DemandSideData",
    "Direction",
    "DualSolution",
    "ExchangeGraph",
    "SumSolution",
    "DirectionSolution",
    "build_weights",
    "solve_sum",
    "extend_to_min_demand",
    "build_exchange_graph",
    "overdemanded_by_reachability",
    "solve_assignment",
    "extract_direction",
    "perturbed_demand_oracle",
    "stability_certificate",
    "separable_direction",
    "detect_separable",
    "eval_dual_objective",
    "compute_direction",
]


# ---------------------------------------------------------------------------
# inputs


@dataclass(frozen=True)
class BuyerDemandData:
    """One buyer's demand-side data at a fixed price.

    ``family`` is the minimal demand family (an M-convex set of bundles),
    ``rank`` its rank oracle on goods ``0..m-1`` and ``slopes`` the right
    derivatives of the buyer's payment functions at the current price.
    """

    family: frozenset
    rank: RankOracle
    slopes: tuple

    def member(self, bundle) -> bool:
        return tuple(bundle) in self.family


@dataclass(frozen=True)
class DemandSideData:
    supply: tuple
    buyers: tuple

    @property
    def m(self) -> int:
        return len(self.supply)

    @property
    def n(self) -> int:
        return len(self.buyers)

    @classmethod
    def from_state(cls, inst: MarketInstance, state: PriceState) -> "DemandSideData":
        buyers = tuple(
            BuyerDemandData(
                family=state.minimal[i].bundles,
                rank=state.rank_min[i],
                slopes=state.slopes[i],
            )
            for i in range(inst.n)
        )
        return cls(tuple(inst.supply), buyers)

    @classmethod
    def from_market(cls, inst: MarketInstance, price) -> "DemandSideData":
        return cls.from_state(inst, price_state(inst, price))

    @classmethod
    def from_families(cls, supply, families, slopes) -> "DemandSideData":
        """Direct construction from explicit minimal demand families.

        Used by fixtures that specify demand data without valuations; each
        family is validated as an M-convex set.
        """
        supply = tuple(int(s) for s in supply)
        m = len(supply)
        buyers = []
        for fam, slope_row in zip(families, slopes, strict=True):
            bundles = frozenset(tuple(int(v) for v in x) for x in fam)
            checked = DemandFamily(bundles, "minimal")
            buyers.append(
                BuyerDemandData(
                    family=checked.bundles,
                    rank=checked.rank_oracle(m),
                    slopes=tuple(rat(s) for s in slope_row),
                )
            )
        return cls(supply, tuple(buyers))


# ---------------------------------------------------------------------------
# weights and the weighted sum problem


def build_weights(side: DemandSideData) -> tuple:
    """Two-tier weight of every (buyer, good) unit: ``(1, 1/slope)``."""
    return tuple(
        tuple(lex_from_slope(s) for s in buyer.slopes) for buyer in side.buyers
    )


@dataclass(frozen=True)
class SumSolution:
    """Optimal tuple for the weighted polymatroid sum problem."""

    bundles: tuple
    value: LexScalar

    def column_total(self, j: int) -> int:
        return sum(x[j] for x in self.bundles)


_SRC = ("src",)
_SNK = ("snk",)


def _as_point(vec, m) -> dict:
    return {j: vec[j] for j in range(m)}


def _cheapest_path(nodes, arcs, source, target):
    """Bellman-Ford minimizing (cost, arc count); None when unreachable.

    Raises if distances keep improving after |nodes| passes, which would
    mean a negative-cost cycle and therefore a solver bug.
    """
    dist = {source: (LEX_ZERO, 0)}
    parent = {}
    for _ in range(len(nodes) + 1):
        changed = False
        for (u, v), cost in arcs.items():
            if u not in dist:
                continue
            base_cost, hops = dist[u]
            cand = (base_cost + cost, hops + 1)
            if v not in dist or cand < dist[v]:
                dist[v] = cand
                parent[v] = u
                changed = True
        if not changed:
            break
    else:
        raise InternalCheckError("negative-cost cycle in the augmenting graph")
    if target not in dist:
        return None
    path = [target]
    while path[-1] != source:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def solve_sum(side: DemandSideData, weights) -> SumSolution:
    """Maximize the two-tier weight of a joint placement of units.

    Feasibility: each buyer's bundle stays in their minimal-demand
    polymatroid and column totals stay within supply.  Successive cheapest
    augmenting paths keep the placement weight-maximal among placements of
    its size; since every unit weighs 1 in the primary tier, the final
    placement is unit-maximal and, among those, secondary-tier maximal.
    """
    m, n = side.m, side.n
    x = [[0] * m for _ in range(n)]
    col = [0] * m

    while True:
        # Nodes carry their role: ("a", i, j) adds a unit of good j to
        # buyer i, ("r", i, j) removes one.  Paths alternate structurally:
        # src -> a [-> r -> a]* -> snk.
        nodes = [_SRC, _SNK]
        arcs = {}
        for i in range(n):
            buyer = side.buyers[i]
            point = _as_point(x[i], m)
            for j in range(m):
                add = ("a", i, j)
                rem = ("r", i, j)
                nodes.extend((add, rem))
                grown = dict(point)
                grown[j] += 1
                if buyer.rank.contains(grown):
                    arcs[(_SRC, add)] = -weights[i][j]
                if col[j] < side.supply[j]:
                    arcs[(add, _SNK)] = LEX_ZERO
                # a removal of good j2 lets this buyer take one unit of j
                for j2 in range(m):
                    if j2 == j or x[i][j2] == 0:
                        continue
                    swapped = dict(point)
                    swapped[j2] -= 1
                    swapped[j] += 1
                    if buyer.rank.contains(swapped):
                        arcs[(("r", i, j2), add)] = -weights[i][j]
                # adding to a column can be paid for by a removal in it
                for i2 in range(n):
                    if i2 != i and x[i2][j] > 0:
                        arcs[(add, ("r", i2, j))] = weights[i2][j]
        path = _cheapest_path(nodes, arcs, _SRC, _SNK)
        if path is None:
            break
        for role, i, j in path[1:-1]:
            x[i][j] += 1 if role == "a" else -1
        col = [sum(x[i][j] for i in range(n)) for j in range(m)]
        for i in range(n):
            if not side.buyers[i].rank.contains(_as_point(x[i], m)):
                raise InternalCheckError(
                    f"augmentation left buyer {i} outside their polymatroid"
                )
        if any(col[j] > side.supply[j] for j in range(m)):
            raise InternalCheckError("augmentation exceeded the supply")

    value = lex_sum(
        weights[i][j].scaled(x[i][j]) for i in range(n) for j in range(m) if x[i][j]
    )
    return SumSolution(tuple(tuple(row) for row in x), value)


def extend_to_min_demand(side: DemandSideData, bundles) -> tuple:
    """Grow each bundle inside its polymatroid until it is a minimal-demand
    bundle (a base point); the joint total may then exceed the supply."""
    out = []
    for i, start in enumerate(bundles):
        buyer = side.buyers[i]
        vec = list(start)
        target = buyer.rank.full_rank
        while sum(vec) < target:
            for j in range(side.m):
                grown = _as_point(vec, side.m)
                grown[j] += 1
                if buyer.rank.contains(grown):
                    vec[j] += 1
                    break
            else:
                raise InternalCheckError(
                    f"buyer {i} bundle cannot be extended to a base point"
                )
        if tuple(vec) not in buyer.family:
            raise InternalCheckError(
                f"extended bundle {tuple(vec)} is not a minimal demand bundle"
            )
        out.append(tuple(vec))
    return tuple(out)


# ---------------------------------------------------------------------------
# exchange graph


@dataclass(frozen=True)
class ExchangeGraph:
    """Unit-copy exchange graph of an extended placement.

    ``copies[k] = (buyer, good)`` identifies one allocated unit; backward
    edges ``good -> copy`` exist exactly when swapping the copy's good for
    that other good keeps the buyer inside their minimal demand family.
    """

    copies: tuple
    backward: tuple
    oversold: frozenset
    extended: tuple

    def copy_count(self) -> int:
        return len(self.copies)


def build_exchange_graph(side: DemandSideData, extended) -> ExchangeGraph:
    copies = []
    backward = []
    for i, bundle in enumerate(extended):
        buyer = side.buyers[i]
        for j in range(side.m):
            for _ in range(bundle[j]):
                swaps = []
                for j2 in range(side.m):
                    if j2 == j:
                        continue
                    vec = list(bundle)
                    vec[j] -= 1
                    vec[j2] += 1
                    if tuple(vec) in buyer.family:
                        swaps.append(j2)
                copies.append((i, j))
                backward.append(frozenset(swaps))
    oversold = frozenset(
        j
        for j in range(side.m)
        if sum(bundle[j] for bundle in extended) > side.supply[j]
    )
    return ExchangeGraph(tuple(copies), tuple(backward), oversold, tuple(extended))


def overdemanded_by_reachability(graph: ExchangeGraph) -> frozenset:
    """Goods with a directed path to an oversold good.

    Arcs run copy -> assigned good and other good -> copy (for feasible
    swaps); the walk is done in reverse from the oversold goods.
    """
    reached = set(graph.oversold)
    frontier = list(graph.oversold)
    while frontier:
        good = frontier.pop()
        for k, (_, assigned) in enumerate(graph.copies):
            if assigned != good:
                continue
            for j2 in graph.backward[k]:
                if j2 not in reached:
                    reached.add(j2)
                    frontier.append(j2)
    return frozenset(reached)


# ---------------------------------------------------------------------------
# assignment market on the support


@dataclass(frozen=True)
class DualSolution:
    """Pointwise-minimal dual prices on the over-demanded support.

    Every price has primary tier exactly 1; the secondary tier (the logarg)
    carries the direction component for its good.
    """

    prices: dict
    support: frozenset


def solve_assignment(
    graph: ExchangeGraph, support: frozenset, weights, supply
) -> DualSolution:
    """Minimal equilibrium prices of the induced unit-demand market.

    Copies assigned into the support are the unit buyers; each good ``j``
    must place exactly ``supply[j]`` units.  The optimal assignment is
    found by successive cheapest augmenting paths, after which the minimal
    equilibrium prices are the least solution of the complementary
    difference constraints (computed as a longest-path fixpoint).
    """
    if not support:
        raise InvalidInputError("assignment market needs a nonempty support")
    members = sorted(support)
    copies = [
        k for k, (_, j) in enumerate(graph.copies) if j in support
    ]
    edges: dict[int, list[int]] = {}
    for k in copies:
        _, assigned = graph.copies[k]
        goods = {assigned} | (graph.backward[k] & support)
        edges[k] = sorted(goods)

    def value(k: int, j: int) -> LexScalar:
        return weights[graph.copies[k][0]][j]

    assign: dict[int, int | None] = {k: None for k in copies}
    filled = {j: 0 for j in members}
    demand_total = sum(supply[j] for j in members)
    if demand_total > len(copies):
        raise InternalCheckError(
            "assignment market cannot saturate the supply on the support"
        )

    for _ in range(demand_total):
        nodes = [_SRC, _SNK] + [("k", k) for k in copies] + [("g", j) for j in members]
        arcs = {}
        for k in copies:
            if assign[k] is None:
                arcs[(_SRC, ("k", k))] = LEX_ZERO
            for j in edges[k]:
                if assign[k] == j:
                    arcs[(("g", j), ("k", k))] = value(k, j)
                else:
                    arcs[(("k", k), ("g", j))] = -value(k, j)
        for j in members:
            if filled[j] < supply[j]:
                arcs[(("g", j), _SNK)] = LEX_ZERO
        path = _cheapest_path(nodes, arcs, _SRC, _SNK)
        if path is None:
            raise InternalCheckError("assignment market is infeasible")
        inner = path[1:-1]
        for t in range(0, len(inner), 2):
            k = inner[t][1]
            j = inner[t + 1][1]
            assign[k] = j
        filled[inner[-1][1]] += 1

    # Minimal equilibrium prices: least solution of
    #   z_j >= value(k, j)                      for unassigned k, (k, j) edge
    #   z_j >= z_{j0} + value(k, j) - value(k, j0)  for k assigned to j0
    prices: dict[int, LexScalar | None] = {j: None for j in members}
    for k in copies:
        if assign[k] is None:
            for j in edges[k]:
                v = value(k, j)
                if prices[j] is None or v > prices[j]:
                    prices[j] = v
    for _ in range(len(members) + 1):
        changed = False
        for k in copies:
            j0 = assign[k]
            if j0 is None or prices[j0] is None:
                continue
            for j in edges[k]:
                if j == j0:
                    continue
                cand = prices[j0] + value(k, j) - value(k, j0)
                if prices[j] is None or cand > prices[j]:
                    prices[j] = cand
                    changed = True
        if not changed:
            break
    else:
        raise InternalCheckError("dual price fixpoint failed to converge")

    for j in members:
        z = prices[j]
        if z is None:
            raise InternalCheckError(f"no dual lower bound reached good {j}")
        if z.base != 1:
            raise InternalCheckError(
                f"dual price of good {j} has primary tier {z.base}, expected 1"
            )
    for k in copies:
        j0 = assign[k]
        if j0 is not None and prices[j0] > value(k, j0):
            raise InternalCheckError(
                f"dual price of good {j0} exceeds the value of its assigned unit"
            )
    return DualSolution({j: prices[j] for j in members}, frozenset(members))


# ---------------------------------------------------------------------------
# direction extraction and stability


@dataclass(frozen=True)
class Direction:
    """Nonnegative price-update direction with its positive support."""

    d: tuple
    support: frozenset

    @classmethod
    def zero(cls, m: int) -> "Direction":
        return cls(tuple(Fraction(0) for _ in range(m)), frozenset())


def extract_direction(dual: DualSolution, m: int) -> Direction:
    d = [Fraction(0)] * m
    for j, z in dual.prices.items():
        d[j] = z.logarg
    return Direction(tuple(d), dual.support)


def perturbed_demand_oracle(
    rank: RankOracle, support: frozenset, costs: Mapping[int, Fraction]
) -> RankOracle:
    """Rank oracle of the minimal demand family after a small advance.

    An advance supported on ``support`` freezes demand off the support and
    shrinks it on the support to the face minimizing the payment-increase
    rate: restriction off the support, direct-summed with the greedy
    minimum face of the contraction.  No step size is ever materialized.
    """
    off = [e for e in rank.ground if e not in support]
    rest = rank.restrict(off)
    tilde = rank.contract(off)
    neg = {j: -Fraction(costs[j]) for j in tilde.ground}
    _, face = greedy_max(tilde, neg, over_base=True, zero=Fraction(0))
    return rest.direct_sum(face.oracle)


def stability_certificate(
    perturbed: Sequence[RankOracle], support: frozenset, supply
):
    """Check that every nonempty subset of the support stays over-demanded
    after the advance: ``s(X) < sum_i perturbed_rank_i(X)``.

    Returns ``(True, None)`` or ``(False, X)`` for the first violating
    subset (smallest, then lexicographic).
    """
    members = sorted(support)
    for size in range(1, len(members) + 1):
        for combo in combinations(members, size):
            s_val = sum(supply[j] for j in combo)
            total = sum(o.rank(combo) for o in perturbed)
            if not s_val < total:
                return False, frozenset(combo)
    return True, None


def detect_separable(slopes):
    """Factor the slope matrix as ``alpha_i * beta_j`` (first buyer scaled
    to 1); returns ``(alpha, beta)`` or None when the matrix is not rank 1."""
    n = len(slopes)
    m = len(slopes[0]) if n else 0
    if n == 0 or m == 0:
        return None
    beta = tuple(slopes[0][j] for j in range(m))
    alpha = tuple(slopes[i][0] / beta[0] for i in range(n))
    for i in range(n):
        for j in range(m):
            if slopes[i][j] != alpha[i] * beta[j]:
                return None
    return alpha, beta


def separable_direction(side: DemandSideData, support: frozenset, alpha, beta) -> Direction:
    """Direction ``1/beta_j`` on the support for buyer-good separable slopes.

    Verifies the factorization exactly before using it.
    """
    alpha = tuple(rat(a) for a in alpha)
    beta = tuple(rat(b) for b in beta)
    for i, buyer in enumerate(side.buyers):
        for j in range(side.m):
            if buyer.slopes[j] != alpha[i] * beta[j]:
                raise NotSeparableError(
                    f"slope of buyer {i}, good {j} is {buyer.slopes[j]}, "
                    f"not alpha*beta = {alpha[i] * beta[j]}"
                )
    d = tuple(
        1 / beta[j] if j in support else Fraction(0) for j in range(side.m)
    )
    return Direction(d, frozenset(support))


def eval_dual_objective(rank_min, supply, weights, z) -> LexScalar:
    """Exact dual objective: per-buyer greedy maxima plus the supply term."""
    total = LEX_ZERO
    for i, oracle in enumerate(rank_min):
        shifted = {j: weights[i][j] - z[j] for j in oracle.ground}
        value, _ = greedy_max(oracle, shifted, over_base=False, zero=LEX_ZERO)
        total = total + value
    for j, s_j in enumerate(supply):
        total = total + z[j].scaled(s_j)
    return total


# ---------------------------------------------------------------------------
# full pipeline


@dataclass(frozen=True)
class DirectionSolution:
    """Everything one direction solve produces (plus diagnostics)."""

    support: frozenset
    direction: Direction
    duals: dict
    dual_value: LexScalar
    placement: SumSolution
    extended: tuple
    graph: ExchangeGraph
    perturbed: tuple = field(default=())


def compute_direction(side: DemandSideData) -> DirectionSolution:
    """Run the full dual pipeline at one price; validates itself throughout.

    Checks on every run: the reachability support equals the enumeration
    support, the dual prices have unit primary tier, the dual objective at
    the extended prices equals the primal optimum, and the returned
    direction passes the stability certificate.
    """
    weights = build_weights(side)
    placement = solve_sum(side, weights)
    extended = extend_to_min_demand(side, placement.bundles)
    graph = build_exchange_graph(side, extended)
    support = overdemanded_by_reachability(graph)

    ranks = [buyer.rank for buyer in side.buyers]
    enum_support = minimal_overdemanded_from_ranks(ranks, side.supply)
    if support != enum_support:
        raise InternalCheckError(
            f"support mismatch: reachability {sorted(support)} "
            f"vs enumeration {sorted(enum_support)}"
        )

    if not support:
        return DirectionSolution(
            support=frozenset(),
            direction=Direction.zero(side.m),
            duals={},
            dual_value=placement.value,
            placement=placement,
            extended=extended,
            graph=graph,
        )

    dual = solve_assignment(graph, support, weights, side.supply)
    direction = extract_direction(dual, side.m)

    z_full = [dual.prices.get(j, LEX_ZERO) for j in range(side.m)]
    dual_value = eval_dual_objective(ranks, side.supply, weights, z_full)
    if dual_value != placement.value:
        raise InternalCheckError(
            f"strong duality failed: primal {placement.value!r} "
            f"vs dual {dual_value!r}"
        )

    perturbed = tuple(
        perturbed_demand_oracle(
            side.buyers[i].rank,
            support,
            {j: side.buyers[i].slopes[j] * direction.d[j] for j in support},
        )
        for i in range(side.n)
    )
    ok, witness = stability_certificate(perturbed, support, side.supply)
    if not ok:
        raise InternalCheckError(
            f"computed direction fails its stability certificate at {sorted(witness)}"
        )
    return DirectionSolution(
        support=support,
        direction=direction,
        duals=dict(dual.prices),
        dual_value=placement.value,
        placement=placement,
        extended=extended,
        graph=graph,
        perturbed=perturbed,
    )
