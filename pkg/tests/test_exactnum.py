import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from frictionauction.exactnum import (
    LEX_ONE,
    LEX_ZERO,
    LexScalar,
    lex_compare,
    lex_from_slope,
    lex_sum,
    rat,
    rat_str,
)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=64)
positives = st.fractions(min_value=F(1, 64), max_value=50, max_denominator=64)
scalars = st.builds(LexScalar, rationals, positives)


def test_rat_parsing_roundtrip():
    assert rat("3/2") == F(3, 2)
    assert rat("-1/8") == F(-1, 8)
    assert rat("7") == F(7)
    assert rat("1.6") == F(8, 5)
    assert rat_str(F(3, 2)) == "3/2"
    assert rat_str(F(-4)) == "-4"
    with pytest.raises(ValueError):
        rat("1/2/3")


def test_weight_from_slope_values():
    assert lex_from_slope(F(2)) == LexScalar(1, F(1, 2))
    assert lex_from_slope(F(1)) == LEX_ONE
    assert lex_from_slope(F(1, 2)) == LexScalar(1, 2)
    with pytest.raises(ValueError):
        lex_from_slope(F(0))
    with pytest.raises(ValueError):
        lex_from_slope(F(-1))


def test_compare_examples():
    assert lex_compare(LexScalar(1, F(1, 2)), LexScalar(1, F(1, 8))) == 1
    assert lex_compare(LexScalar(2, 1), LexScalar(1, 1000)) == 1
    assert lex_compare(LexScalar(0, 1), LexScalar(0, 1)) == 0


def test_sum_examples():
    assert lex_sum([LexScalar(1, F(1, 2)), LexScalar(1, 2)]) == LexScalar(2, 1)
    assert lex_sum([LexScalar(1, F(1, 2))] * 3) == LexScalar(3, F(1, 8))
    assert lex_sum([]) == LEX_ZERO
    assert LexScalar(1, F(1, 2)).scaled(3) == LexScalar(3, F(1, 8))


def test_logarg_must_be_positive():
    with pytest.raises(ValueError):
        LexScalar(0, 0)
    with pytest.raises(ValueError):
        LexScalar(0, -1)


def test_json_roundtrip():
    x = LexScalar(F(-3, 2), F(5, 8))
    assert LexScalar.from_json(x.to_json()) == x
    assert x.to_json() == {"base": "-3/2", "logarg": "5/8"}


@given(scalars, scalars, scalars)
def test_addition_associative_commutative(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a


@given(scalars)
def test_additive_identity_and_inverse(a):
    assert a + LEX_ZERO == a
    assert -(-a) == a
    assert (a + (-a)) == LEX_ZERO


@given(scalars, scalars)
def test_order_compatible_with_subtraction(a, b):
    assert (a >= b) == ((a - b) >= LEX_ZERO)
    assert (a > b) == ((a - b) > LEX_ZERO)


@given(scalars, st.integers(min_value=0, max_value=6))
def test_integer_scaling_is_repeated_addition(a, k):
    assert a.scaled(k) == lex_sum([a] * k)


def test_concrete_tiny_constant_consistency():
    """For any finite set, a small enough numeric tier weight reproduces the
    lexicographic order (floating point, so the gap is kept comfortable)."""
    values = [
        LexScalar(F(1), F(1, 2)),
        LexScalar(F(1), F(1, 8)),
        LexScalar(F(1), F(5, 8)),
        LexScalar(F(2), F(2)),
        LexScalar(F(0), F(3)),
        LexScalar(F(1, 2), F(1, 3)),
    ]
    base_gaps = [
        abs(float(a.base - b.base))
        for a in values
        for b in values
        if a.base != b.base
    ]
    log_span = max(abs(math.log(float(v.logarg))) for v in values)
    tiny = min(base_gaps) / (4 * (log_span + 1))
    for a in values:
        for b in values:
            numeric = (
                float(a.base) + tiny * math.log(float(a.logarg)),
                float(b.base) + tiny * math.log(float(b.logarg)),
            )
            if a > b:
                assert numeric[0] > numeric[1]
            elif a < b:
                assert numeric[0] < numeric[1]
