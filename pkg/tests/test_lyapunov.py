import random
from fractions import Fraction as F
from itertools import product

import pytest

from frictionauction.auction import run_auction
from frictionauction.errors import NotSeparableError, WrongModeError
from frictionauction.lyapunov import (
    check_translation_submodularity,
    detect_frictions,
    directional_derivative,
    eval_lyapunov,
    eval_scaled_lyapunov,
)
from frictionauction.market import overdemand

from conftest import (
    paired_goods,
    random_separable_instance,
    separable_scaled,
    three_buyer_frictions,
)

PZERO = (F(0), F(0))


def test_plain_potential_values(pair_market):
    assert eval_lyapunov(pair_market, PZERO) == 8  # both buyers take everything
    high = (F(50), F(50))
    assert eval_lyapunov(pair_market, high) == F(100)  # pure revenue term
    with pytest.raises(WrongModeError):
        eval_lyapunov(three_buyer_frictions(), PZERO)


def test_scaled_potential_golden_pair(scaled_market):
    fr = detect_frictions(scaled_market, PZERO)
    p = (F(1, 2), F(1, 5))
    p2 = (F(0), F(1, 10))
    total = eval_scaled_lyapunov(scaled_market, fr, p) + eval_scaled_lyapunov(
        scaled_market, fr, p2
    )
    assert total == F(28, 5)
    lam = F(1, 10)
    # standard translation submodularity fails: the meet/join pair sums higher
    ones = (F(1), F(1))
    down = tuple(max(p[j] - lam * ones[j], p2[j]) for j in range(2))
    up = tuple(min(p[j], p2[j] + lam * ones[j]) for j in range(2))
    mj = eval_scaled_lyapunov(scaled_market, fr, down) + eval_scaled_lyapunov(
        scaled_market, fr, up
    )
    assert mj == F(57, 10)
    assert not check_translation_submodularity(scaled_market, fr, p, p2, lam, tau=ones)
    # with the inverse good coefficients the inequality is a theorem
    assert check_translation_submodularity(scaled_market, fr, p, p2, lam)
    assert check_translation_submodularity(
        scaled_market, fr, p, p2, lam, tau=(F(1), F(1, 2))
    )


def test_scaled_reduces_to_plain_when_coefficients_are_one(pair_market):
    fr = detect_frictions(pair_market, PZERO)
    for p in [(F(0), F(0)), (F(1), F(1)), (F(1, 2), F(3, 2))]:
        assert eval_scaled_lyapunov(pair_market, fr, p) == eval_lyapunov(pair_market, p)


def test_detect_rejects_non_separable():
    with pytest.raises(NotSeparableError):
        detect_frictions(three_buyer_frictions(), PZERO)


def test_plain_submodularity_random_pairs(scaled_market):
    fr = detect_frictions(scaled_market, PZERO)
    rng = random.Random(5)
    for _ in range(25):
        p = tuple(F(rng.randint(0, 8), 4) for _ in range(2))
        p2 = tuple(F(rng.randint(0, 8), 4) for _ in range(2))
        assert check_translation_submodularity(scaled_market, fr, p, p2, F(0))


def test_derivative_identity_examples(pair_market):
    fr = detect_frictions(pair_market, PZERO)
    assert directional_derivative(pair_market, fr, PZERO, set()) == 0
    assert directional_derivative(pair_market, fr, PZERO, {0, 1}) == -2
    assert overdemand(pair_market, {0, 1}, PZERO) == 2
    eq = (F(1), F(2))
    for mask in range(1, 4):
        sub = {j for j in range(2) if mask >> j & 1}
        assert directional_derivative(pair_market, fr, eq, sub) >= 0


def test_derivative_identity_along_random_traces():
    rng = random.Random(12)
    sampled = 0
    while sampled < 40:
        inst, _, _ = random_separable_instance(rng)
        fr = detect_frictions(inst, tuple(F(0) for _ in range(inst.m)))
        trace = run_auction(inst)
        for record in trace.iterations:
            for mask in range(1, 1 << inst.m):
                sub = {j for j in range(inst.m) if mask >> j & 1}
                got = directional_derivative(inst, fr, record.price_before, sub)
                assert got == -overdemand(inst, sub, record.price_before)
                sampled += 1


def test_scaled_potential_descends_along_traces():
    rng = random.Random(21)
    for _ in range(15):
        inst, _, _ = random_separable_instance(rng)
        fr = detect_frictions(inst, tuple(F(0) for _ in range(inst.m)))
        trace = run_auction(inst)
        values = [
            eval_scaled_lyapunov(inst, fr, record.price_before)
            for record in trace.iterations
            if record.event != "termination"
        ]
        values.append(eval_scaled_lyapunov(inst, fr, trace.final_price))
        # strict descent across every price-moving step
        for a, b in zip(values, values[1:]):
            assert b < a


def test_final_price_minimizes_scaled_potential_nearby(scaled_market):
    fr = detect_frictions(scaled_market, PZERO)
    trace = run_auction(scaled_market)
    base = eval_scaled_lyapunov(scaled_market, fr, trace.final_price)
    offsets = [F(-1, 3), F(0), F(1, 3), F(1)]
    for delta in product(offsets, repeat=scaled_market.m):
        probe = tuple(
            max(F(0), trace.final_price[j] + delta[j]) for j in range(scaled_market.m)
        )
        assert eval_scaled_lyapunov(scaled_market, fr, probe) >= base
