"""Equilibrium allocation recovery at a clearing price.

At an equilibrium price the demand-respecting allocations that exhaust the
supply are exactly the common points of two base polyhedra: tuples of
demanded bundles with the right total size, and tuples with prescribed
column sums.  The exchange-based procedure starts from a point of the
first polyhedron and walks unit swaps (single-buyer exchanges and
cross-buyer transfers, both validated against the demand families) along
shortest excess-to-deficit paths until the column sums match the supply.

A direct exhaustive search is also available and is the default on small
instances; the exchange procedure is validated against it at desk scale.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product

from .errors import InternalCheckError, InvalidInputError
from .market import MarketInstance, demand, is_equilibrium_price

__all__ = ["AllocationState", "demand_exchange_capacity", "b1_capacity", "compute_allocation"]

BRUTE_DEFAULT_LIMIT = 1_000_000


@dataclass
class AllocationState:
    """Mutable search state: per-buyer bundles plus the demand families."""

    bundles: list
    families: tuple
    supply: tuple
    phase: str = "searching"

    def column(self, j: int) -> int:
        return sum(x[j] for x in self.bundles)

    def total(self) -> int:
        return sum(sum(x) for x in self.bundles)

    def in_b1(self) -> bool:
        return self.total() == sum(self.supply) and all(
            tuple(x) in fam for x, fam in zip(self.bundles, self.families)
        )


def demand_exchange_capacity(family, bundle, add, remove) -> int:
    """Largest ``a`` with ``bundle + a*(unit(add) - unit(remove))`` in the family.

    ``add`` or ``remove`` may be None for a pure removal / addition.
    Enumerated directly over the family; the family is the ground truth.
    """
    if add is None and remove is None:
        raise InvalidInputError("capacity query needs at least one of add/remove")
    vec = list(bundle)
    if tuple(vec) not in family:
        raise InvalidInputError(f"bundle {bundle} is not in the demand family")
    alpha = 0
    while True:
        if add is not None:
            vec[add] += 1
        if remove is not None:
            vec[remove] -= 1
            if vec[remove] < 0:
                return alpha
        if tuple(vec) not in family:
            return alpha
        alpha += 1


def b1_capacity(state: AllocationState, e, f) -> int:
    """Exchange capacity on the size-constrained tuple polyhedron.

    ``e`` adds units at (buyer, good), ``f`` removes; ``f=None`` is the
    saturation capacity, which is 0 because the total size is already
    maximal.  Same-buyer pairs reduce to the buyer's demand-set exchange
    capacity; cross-buyer pairs to the min of a pure addition and a pure
    removal capacity.
    """
    if not state.in_b1():
        raise InvalidInputError("capacity query outside the search polyhedron")
    if f is None:
        return 0
    (i, j), (i2, j2) = e, f
    if (i, j) == (i2, j2):
        raise InvalidInputError("exchange elements must differ")
    if i == i2:
        return demand_exchange_capacity(state.families[i], state.bundles[i], j, j2)
    grow = demand_exchange_capacity(state.families[i], state.bundles[i], j, None)
    shrink = demand_exchange_capacity(state.families[i2], state.bundles[i2], None, j2)
    return min(grow, shrink)


def _start_point(inst: MarketInstance, families) -> list:
    """A tuple of demanded bundles whose total size matches the supply.

    Starts from minimal demanded bundles and grows one unit at a time
    wherever the demand family allows; the no-under-demand property of the
    equilibrium price guarantees the target size is reachable.
    """
    target = sum(inst.supply)
    bundles = []
    for fam in families:
        bundles.append(list(min(sorted(fam), key=lambda x: (sum(x), x))))
    total = sum(sum(x) for x in bundles)
    if total > target:
        raise InternalCheckError("minimal demand already exceeds the supply size")
    while total < target:
        for i in range(inst.n):
            grown = None
            for j in range(inst.m):
                vec = list(bundles[i])
                vec[j] += 1
                if tuple(vec) in families[i]:
                    grown = vec
                    break
            if grown is not None:
                bundles[i] = grown
                total += 1
                break
        else:
            raise InternalCheckError(
                "cannot grow any bundle; contradicts the equilibrium precondition"
            )
    return bundles


def _swap_arcs(state: AllocationState, inst: MarketInstance):
    """Unit moves good j -> good j2 available from the current state.

    Yields ``(j, j2, apply)`` where ``apply`` performs one unit of the move.
    """
    for i in range(inst.n):
        fam = state.families[i]
        bundle = state.bundles[i]
        for j in range(inst.m):
            if bundle[j] == 0:
                continue
            for j2 in range(inst.m):
                if j2 == j:
                    continue
                vec = list(bundle)
                vec[j] -= 1
                vec[j2] += 1
                if tuple(vec) in fam:
                    yield j, j2, (i, None, j, j2)
        # cross-buyer: buyer i gives up one unit of j, buyer i2 takes one of j2
        for i2 in range(inst.n):
            if i2 == i:
                continue
            fam2 = state.families[i2]
            bundle2 = state.bundles[i2]
            for j in range(inst.m):
                if bundle[j] == 0:
                    continue
                down = list(bundle)
                down[j] -= 1
                if tuple(down) not in fam:
                    continue
                for j2 in range(inst.m):
                    up = list(bundle2)
                    up[j2] += 1
                    if tuple(up) in fam2:
                        yield j, j2, (i, i2, j, j2)


def _apply_move(state: AllocationState, move) -> None:
    i, i2, j, j2 = move
    if i2 is None:
        state.bundles[i][j] -= 1
        state.bundles[i][j2] += 1
    else:
        state.bundles[i][j] -= 1
        state.bundles[i2][j2] += 1


def _allocate_by_exchanges(inst: MarketInstance, families) -> tuple:
    state = AllocationState(
        bundles=_start_point(inst, families),
        families=tuple(families),
        supply=tuple(inst.supply),
    )
    guard = 0
    while True:
        excess = [j for j in range(inst.m) if state.column(j) > inst.supply[j]]
        deficit = {j for j in range(inst.m) if state.column(j) < inst.supply[j]}
        if not excess:
            break
        guard += 1
        if guard > sum(inst.supply) * (inst.m + 1) * (inst.n + 1) * 4:
            raise InternalCheckError("allocation exchange walk failed to converge")
        # BFS over goods for a shortest excess -> deficit chain of unit moves
        parent: dict[int, tuple] = {}
        frontier = deque(excess)
        seen = set(excess)
        hit = None
        while frontier and hit is None:
            good = frontier.popleft()
            for j, j2, move in _swap_arcs(state, inst):
                if j != good or j2 in seen:
                    continue
                parent[j2] = (good, move)
                if j2 in deficit:
                    hit = j2
                    break
                seen.add(j2)
                frontier.append(j2)
        if hit is None:
            raise InternalCheckError(
                "no exchange chain from an oversupplied to an undersupplied good"
            )
        chain = []
        node = hit
        while node in parent:
            prev, move = parent[node]
            chain.append(move)
            node = prev
        for move in reversed(chain):
            i, i2, j, j2 = move
            # moves later in the chain may have been invalidated; re-check
            # and, if one broke, restart from the (still valid) new state
            down = list(state.bundles[i])
            down[j] -= 1
            if i2 is None:
                down[j2] += 1
                ok = tuple(down) in state.families[i]
            else:
                up = list(state.bundles[i2])
                up[j2] += 1
                ok = (
                    tuple(down) in state.families[i]
                    and tuple(up) in state.families[i2]
                )
            if not ok:
                break
            _apply_move(state, move)
    state.phase = "done"
    return tuple(tuple(x) for x in state.bundles)


def _allocate_by_search(inst: MarketInstance, families) -> tuple | None:
    """First demand-respecting allocation with exact column sums, or None."""
    ordered = [sorted(fam) for fam in families]
    target = inst.supply

    def rec(i, remaining):
        if i == len(ordered):
            return () if all(r == 0 for r in remaining) else None
        for x in ordered[i]:
            if all(x[j] <= remaining[j] for j in range(inst.m)):
                rest = rec(i + 1, tuple(remaining[j] - x[j] for j in range(inst.m)))
                if rest is not None:
                    return (x,) + rest
        return None

    return rec(0, tuple(target))


def compute_allocation(inst: MarketInstance, price, method: str = "auto") -> tuple:
    """Demand-respecting bundles summing exactly to the supply.

    ``method`` is ``"auto"`` (exhaustive search when the family product is
    small, exchange walk otherwise), ``"brute"`` or ``"exchange"``.
    Requires ``price`` to be an equilibrium price.
    """
    ok, witness = is_equilibrium_price(inst, price)
    if not ok:
        raise InvalidInputError(f"not an equilibrium price; witness {witness}")
    families = tuple(demand(inst, i, price, "full").bundles for i in range(inst.n))
    if method == "auto":
        size = 1
        for fam in families:
            size *= len(fam)
        method = "brute" if size <= BRUTE_DEFAULT_LIMIT else "exchange"
    if method == "brute":
        found = _allocate_by_search(inst, families)
        if found is None:
            raise InternalCheckError(
                "no clearing allocation despite an equilibrium price"
            )
        result = found
    elif method == "exchange":
        result = _allocate_by_exchanges(inst, families)
    else:
        raise InvalidInputError(f"unknown allocation method {method!r}")
    for i, bundle in enumerate(result):
        if bundle not in families[i]:
            raise InternalCheckError(f"buyer {i} allocation is not demanded")
    for j in range(inst.m):
        if sum(x[j] for x in result) != inst.supply[j]:
            raise InternalCheckError("allocation does not clear the market")
    return result
