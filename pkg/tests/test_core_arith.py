from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unitpart.core_arith import (
    format_rat,
    nat_gcd,
    nat_valuation,
    parse_rat,
    rat_add,
    rat_normalize,
    rat_sum,
)


def test_normalize_reduces():
    assert rat_normalize(2, 4) == Fraction(1, 2)
    assert rat_normalize(0, 5) == Fraction(0)
    assert rat_normalize(7, 1) == Fraction(7)


def test_normalize_rejects_zero_denominator():
    with pytest.raises(ValueError):
        rat_normalize(1, 0)


def test_add_exact():
    assert rat_add(Fraction(1, 3), Fraction(1, 6)) == Fraction(1, 2)
    assert rat_add(Fraction(1, 2), Fraction(1, 2)) == 1


def test_sum_empty_is_zero():
    assert rat_sum([]) == Fraction(0)


def test_sum_unit_fractions():
    assert rat_sum(Fraction(1, v) for v in (2, 3, 6)) == 1
    assert rat_sum(Fraction(1, v) for v in (4, 12)) == Fraction(1, 3)


@settings(deadline=None, max_examples=60)
@given(st.lists(st.fractions(), max_size=40))
def test_sum_matches_left_fold(values):
    assert rat_sum(values) == sum(values, Fraction(0))


def test_gcd():
    assert nat_gcd(12, 18) == 6
    assert nat_gcd(7, 1) == 1
    with pytest.raises(ValueError):
        nat_gcd(-4, 6)


def test_valuation():
    assert nat_valuation(2, 24) == 3
    assert nat_valuation(3, 24) == 1
    assert nat_valuation(5, 24) == 0
    assert nat_valuation(7, 1806) == 1


def test_valuation_domain():
    with pytest.raises(ValueError):
        nat_valuation(1, 10)
    with pytest.raises(ValueError):
        nat_valuation(2, 0)


def test_format_parse_roundtrip():
    assert format_rat(Fraction(2, 3)) == "2/3"
    assert parse_rat("2/3") == Fraction(2, 3)
    assert parse_rat("7") == Fraction(7)
    assert parse_rat(format_rat(Fraction(1))) == 1
