import json
from fractions import Fraction as F

import pytest

from frictionauction.auction import (
    AuctionTrace,
    default_iteration_cap,
    next_event,
    run_auction,
)
from frictionauction.direction import Direction
from frictionauction.errors import NonterminationError
from frictionauction.exactnum import LexScalar
from frictionauction.market import (
    Buyer,
    MarketInstance,
    PiecewisePayment,
    Valuation,
    is_equilibrium_price,
    price_state,
)
from frictionauction.properties import check_no_underdemand, check_trace_shape

from conftest import paired_goods, three_buyer_frictions

PZERO = (F(0), F(0))


def test_next_event_showcase_first_two_steps(showcase):
    state = price_state(showcase, PZERO)
    step, trigger = next_event(showcase, state, Direction((F(1, 2), F(1, 2)), frozenset({0, 1})))
    assert (step, trigger) == (F(2), "demand_change")
    state = price_state(showcase, (F(1), F(1)))
    step, trigger = next_event(showcase, state, Direction((F(1, 2), F(1, 8)), frozenset({0, 1})))
    assert (step, trigger) == (F(1), "demand_change")


def test_next_event_second_price_logic():
    supply = (1,)
    ident = (PiecewisePayment.identity(),)
    inst = MarketInstance(
        supply,
        (
            Buyer(Valuation.unit_demand([3], supply), ident),
            Buyer(Valuation.unit_demand([5], supply), ident),
        ),
    )
    state = price_state(inst, (F(0),))
    step, trigger = next_event(inst, state, Direction((F(1),), frozenset({0})))
    assert (step, trigger) == (F(3), "demand_change")


def test_next_event_breakpoint_wins_ties():
    supply = (1,)
    bp = PiecewisePayment(((F(0), F(0)), (F(1), F(1))), F(2))
    inst = MarketInstance(
        supply,
        (
            Buyer(Valuation.unit_demand([1], supply), (bp,)),
            Buyer(Valuation.unit_demand([5], supply), (PiecewisePayment.identity(),)),
        ),
    )
    state = price_state(inst, (F(0),))
    # buyer 0 ties with the empty bundle exactly at the breakpoint price 1
    step, trigger = next_event(inst, state, Direction((F(1),), frozenset({0})))
    assert step == F(1)
    assert trigger == "slope_breakpoint"


def test_showcase_trace_golden(showcase):
    trace = run_auction(showcase)
    prices = [r.price_before for r in trace.iterations]
    directions = [r.direction for r in trace.iterations]
    events = [r.event for r in trace.iterations]
    duals = [r.dual_value for r in trace.iterations]

    assert prices[0] == (F(0), F(0))
    assert directions[0] == (F(1, 2), F(1, 2))
    assert events[0] == "dual_value_increase"
    assert prices[1] == (F(1), F(1))
    assert directions[1] == (F(1, 2), F(1, 8))
    assert events[1] == "dual_minimal_increase"
    assert prices[2] == (F(3, 2), F(9, 8))
    assert directions[2] == (F(1, 2), F(5, 8))
    assert duals[0] == LexScalar(2, F(1, 2))
    assert duals[1] == LexScalar(2, 2)
    assert duals[2] == LexScalar(2, 2)
    assert events[-1] == "termination"
    assert trace.final_price == (F(35, 8), F(35, 8))
    ok, _ = is_equilibrium_price(showcase, trace.final_price)
    assert ok


def test_pair_market_trace(pair_market):
    trace = run_auction(pair_market)
    assert trace.final_price == (F(1), F(2))
    assert [r.event for r in trace.iterations] == [
        "overdemand_change",
        "overdemand_change",
        "termination",
    ]
    assert [r.potential for r in trace.iterations] == [4, 2, 0]


def test_already_clear_market_terminates_immediately():
    supply = (2,)
    ident = (PiecewisePayment.identity(),)
    inst = MarketInstance(
        supply,
        (
            Buyer(Valuation.unit_demand([3], supply), ident),
            Buyer(Valuation.unit_demand([5], supply), ident),
        ),
    )
    trace = run_auction(inst)
    assert trace.final_price == (F(0),)
    assert len(trace.iterations) == 1
    assert trace.iterations[0].event == "termination"


def test_no_underdemand_along_showcase_trace(showcase):
    trace = run_auction(showcase)
    for record in trace.iterations:
        ok, detail = check_no_underdemand(showcase, record.price_before)
        assert ok, detail


def test_trace_shape_invariants(showcase, pair_market):
    for inst in (showcase, pair_market):
        ok, detail = check_trace_shape(inst, run_auction(inst))
        assert ok, detail


def test_iteration_cap_diagnostic(showcase):
    with pytest.raises(NonterminationError) as err:
        run_auction(showcase, iteration_cap=1)
    assert isinstance(err.value.trace, AuctionTrace)
    assert default_iteration_cap(showcase) >= 60


def test_trace_json_stable(showcase):
    a = run_auction(showcase).to_json_str()
    b = run_auction(showcase).to_json_str()
    assert a == b
    parsed = json.loads(a)
    assert parsed["final_price"] == ["35/8", "35/8"]
    first = parsed["iterations"][0]
    assert list(first.keys()) == [
        "price_before",
        "support",
        "direction",
        "duals",
        "dual_value",
        "step",
        "event",
        "potential",
    ]
    assert first["duals"]["0"] == {"base": "1", "logarg": "1/2"}
