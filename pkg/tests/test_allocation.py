import random
from fractions import Fraction as F

import pytest

from frictionauction.allocation import (
    AllocationState,
    b1_capacity,
    compute_allocation,
    demand_exchange_capacity,
)
from frictionauction.auction import run_auction
from frictionauction.errors import InvalidInputError
from frictionauction.market import (
    Buyer,
    MarketInstance,
    PiecewisePayment,
    Valuation,
    demand,
)
from frictionauction.oracle import brute_equilibrium_allocations

from conftest import paired_goods, random_frictional_instance, three_buyer_frictions


def clearing_state(inst, price):
    families = tuple(demand(inst, i, price, "full").bundles for i in range(inst.n))
    from frictionauction.allocation import _start_point

    return AllocationState(
        bundles=_start_point(inst, families),
        families=families,
        supply=tuple(inst.supply),
    )


def test_saturation_capacity_is_zero_on_the_base(pair_market):
    state = clearing_state(pair_market, (F(1), F(2)))
    assert b1_capacity(state, (0, 0), None) == 0


def test_singleton_demand_blocks_swaps():
    supply = (1, 1)
    ident = (PiecewisePayment.identity(), PiecewisePayment.identity())
    inst = MarketInstance(
        supply,
        (
            Buyer(Valuation.additive([3, 0], supply), ident),
            Buyer(Valuation.additive([0, 3], supply), ident),
        ),
    )
    price = (F(0), F(0))
    fam = demand(inst, 0, price, "full").bundles
    assert demand_exchange_capacity(fam, (1, 0), 1, 0) == 0


def test_b1_capacity_matches_enumeration():
    rng = random.Random(31)
    checked = 0
    for _ in range(25):
        inst = random_frictional_instance(rng)
        trace = run_auction(inst)
        price = trace.final_price
        state = clearing_state(inst, price)
        if not state.in_b1():
            continue
        pairs = [(i, j) for i in range(inst.n) for j in range(inst.m)]
        for e in pairs:
            for f in pairs:
                if e == f:
                    continue
                got = b1_capacity(state, e, f)
                # brute scan: grow e, shrink f, stay in every family with the
                # same joint size
                alpha = 0
                while True:
                    trial = [list(x) for x in state.bundles]
                    trial[e[0]][e[1]] += alpha + 1
                    trial[f[0]][f[1]] -= alpha + 1
                    if trial[f[0]][f[1]] < 0:
                        break
                    if any(
                        tuple(x) not in fam
                        for x, fam in zip(trial, state.families)
                    ):
                        break
                    alpha += 1
                assert got == alpha
                checked += 1
    assert checked > 50


def test_single_buyer_style_everything_supply():
    supply = (2, 1)
    ident = (PiecewisePayment.identity(), PiecewisePayment.identity())
    inst = MarketInstance(
        supply,
        (
            Buyer(Valuation.additive([3, 3], supply), ident),
            Buyer(Valuation.additive([0, 0], supply), ident),
        ),
    )
    price = (F(0), F(0))
    allocation = compute_allocation(inst, price)
    assert allocation[0] == (2, 1)
    assert allocation[1] == (0, 0)


def test_pair_market_perfect_split(pair_market):
    allocation = compute_allocation(pair_market, (F(1), F(2)))
    assert sorted(allocation) == [(0, 1), (1, 0)]


def test_rejects_non_equilibrium_price(pair_market):
    with pytest.raises(InvalidInputError):
        compute_allocation(pair_market, (F(0), F(0)))


@pytest.mark.parametrize("method", ["brute", "exchange"])
def test_allocation_in_exhaustive_set(method):
    rng = random.Random(77)
    for _ in range(30):
        inst = random_frictional_instance(rng)
        trace = run_auction(inst)
        price = trace.final_price
        allocation = compute_allocation(inst, price, method=method)
        assert allocation in brute_equilibrium_allocations(inst, price)


def test_showcase_allocation(showcase):
    price = (F(35, 8), F(35, 8))
    allocation = compute_allocation(showcase, price, method="exchange")
    assert allocation in brute_equilibrium_allocations(showcase, price)
    assert sum(x[0] for x in allocation) == 1
    assert sum(x[1] for x in allocation) == 1
