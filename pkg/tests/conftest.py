"""Shared builders: bundled showcase markets and random corpus generators."""

from __future__ import annotations

import random
from fractions import Fraction as F
from pathlib import Path

import pytest

from frictionauction.errors import InvalidInputError
from frictionauction.market import Buyer, MarketInstance, PiecewisePayment, Valuation

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

FRICTION_SLOPES = [F(1, 2), F(1), F(8, 5), F(2), F(3)]


def three_buyer_frictions() -> MarketInstance:
    """Two goods, three unit-demand buyers, heterogeneous linear payments."""
    supply = (1, 1)
    return MarketInstance(
        supply,
        (
            Buyer(
                Valuation.unit_demand(["8.2", "7"], supply),
                (PiecewisePayment.linear(2), PiecewisePayment.linear("1.6")),
            ),
            Buyer(
                Valuation.unit_demand(["8", "9.5"], supply),
                (PiecewisePayment.linear("0.5"), PiecewisePayment.linear(2)),
            ),
            Buyer(
                Valuation.unit_demand(["10", "10"], supply),
                (PiecewisePayment.linear(1), PiecewisePayment.linear(1)),
            ),
        ),
    )


def paired_goods() -> MarketInstance:
    """Two identical buyers valuing the pair at 4 (2 + 3 individually)."""
    supply = (1, 1)
    table = {(0, 0): 0, (1, 0): 2, (0, 1): 3, (1, 1): 4}
    ident = (PiecewisePayment.identity(), PiecewisePayment.identity())
    return MarketInstance(
        supply, (Buyer(Valuation(supply, table), ident), Buyer(Valuation(supply, table), ident))
    )


def separable_scaled() -> MarketInstance:
    """Additive + unit-demand pair with good-specific linear payments 1 and 2."""
    supply = (1, 1)
    pays = (PiecewisePayment.linear(1), PiecewisePayment.linear(2))
    return MarketInstance(
        supply,
        (
            Buyer(Valuation.additive([1, 1], supply), pays),
            Buyer(Valuation.unit_demand([1, 1], supply), pays),
        ),
    )


def three_good_families():
    """Minimal demand families and slopes of the direction-module fixture."""
    families = [
        [(1, 0, 1), (0, 1, 1)],
        [(0, 1, 1)],
        [(0, 1, 0), (0, 0, 1)],
    ]
    slopes = [[1, 1, 1], [1, 1, 1], [1, 2, 1]]
    return (1, 1, 1), families, slopes


# ---------------------------------------------------------------------------
# random corpus


def _concave_series(rng: random.Random, length: int, first_max: int) -> list[int]:
    """Nonincreasing nonnegative increments -> concave cumulative values."""
    out = []
    cur = rng.randint(0, first_max)
    for _ in range(length):
        out.append(cur)
        cur = rng.randint(0, cur)
    return out


def random_valuation(rng: random.Random, supply, vmax: int = 10) -> Valuation:
    """Random monotone M-natural-concave valuation with integer values <= vmax.

    Draws from additive, unit-demand and coordinate+total concave classes;
    regenerates until the creation-time validation accepts and the value cap
    holds.
    """
    m = len(supply)
    while True:
        kind = rng.choice(("additive", "unit", "laminar"))
        try:
            if kind == "additive":
                vals = [rng.randint(0, max(1, vmax // max(1, sum(supply)))) for _ in range(m)]
                val = Valuation.additive(vals, supply)
            elif kind == "unit":
                vals = [rng.randint(0, vmax) for _ in range(m)]
                val = Valuation.unit_demand(vals, supply)
            else:
                per_good = [_concave_series(rng, supply[j], 2) for j in range(m)]
                total_series = _concave_series(rng, sum(supply), 2)
                table = {}
                from itertools import product

                for x in product(*(range(s + 1) for s in supply)):
                    v = sum(sum(per_good[j][: x[j]]) for j in range(m))
                    v += sum(total_series[: sum(x)])
                    table[x] = v
                val = Valuation(supply, table)
        except InvalidInputError:
            continue
        if max(val.table.values()) <= vmax:
            return val


def random_frictionless_instance(rng: random.Random) -> MarketInstance:
    """Identity payments, integer valuations <= 10, m <= 3, s(M) <= 4."""
    m = rng.randint(1, 3)
    total = rng.randint(1, 4)
    supply = [0] * m
    for _ in range(total):
        supply[rng.randrange(m)] += 1
    supply = tuple(supply)
    n = rng.randint(2, 3)
    buyers = tuple(
        Buyer(
            random_valuation(rng, supply),
            tuple(PiecewisePayment.identity() for _ in range(m)),
        )
        for _ in range(n)
    )
    return MarketInstance(supply, buyers)


def random_payment(rng: random.Random) -> PiecewisePayment:
    """Linear or two-segment payment with slopes from the bundled slope set."""
    s1 = rng.choice(FRICTION_SLOPES)
    if rng.random() < 0.5:
        return PiecewisePayment.linear(s1)
    s2 = rng.choice(FRICTION_SLOPES)
    b = rng.choice([F(1, 2), F(1), F(3, 2), F(2)])
    return PiecewisePayment(((F(0), F(0)), (b, s1 * b)), s2)


def random_frictional_instance(rng: random.Random) -> MarketInstance:
    """Random market with rational piecewise-linear frictions."""
    m = rng.randint(1, 3)
    total = rng.randint(1, 4)
    supply = [0] * m
    for _ in range(total):
        supply[rng.randrange(m)] += 1
    supply = tuple(supply)
    n = rng.randint(2, 3)
    buyers = tuple(
        Buyer(
            random_valuation(rng, supply),
            tuple(random_payment(rng) for _ in range(m)),
        )
        for _ in range(n)
    )
    return MarketInstance(supply, buyers)


def random_separable_instance(rng: random.Random, with_breakpoints: bool = False):
    """Buyer-by-good separable slopes; returns (instance, alpha, beta).

    Without breakpoints the good factors are price-independent; with them,
    every buyer's payment for a good shares that good's breakpoint.
    """
    m = rng.randint(1, 3)
    total = rng.randint(1, 4)
    supply = [0] * m
    for _ in range(total):
        supply[rng.randrange(m)] += 1
    supply = tuple(supply)
    n = rng.randint(2, 3)
    alpha = [rng.choice([F(1, 2), F(1), F(2), F(3)]) for _ in range(n)]
    beta1 = [rng.choice([F(1, 2), F(1), F(8, 5), F(2)]) for _ in range(m)]
    if with_breakpoints:
        beta2 = [rng.choice([F(1, 2), F(1), F(8, 5), F(2)]) for _ in range(m)]
        bps = [rng.choice([F(1, 2), F(1), F(2)]) for _ in range(m)]
    buyers = []
    for i in range(n):
        payments = []
        for j in range(m):
            if with_breakpoints:
                knot = alpha[i] * beta1[j] * bps[j]
                payments.append(
                    PiecewisePayment(((F(0), F(0)), (bps[j], knot)), alpha[i] * beta2[j])
                )
            else:
                payments.append(PiecewisePayment.linear(alpha[i] * beta1[j]))
        buyers.append(Buyer(random_valuation(rng, supply), tuple(payments)))
    return MarketInstance(supply, tuple(buyers)), tuple(alpha), tuple(beta1)


@pytest.fixture
def showcase():
    return three_buyer_frictions()


@pytest.fixture
def pair_market():
    return paired_goods()


@pytest.fixture
def scaled_market():
    return separable_scaled()
