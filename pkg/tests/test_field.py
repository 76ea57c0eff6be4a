"""Scalar arithmetic, exponential, and literal round-trip tests."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from padic_limits import (
    ConfigError,
    FieldSpec,
    PrecisionError,
    congruent,
    format_scalar,
    padic_exp,
    parse_scalar,
)

F5 = FieldSpec(5, 1, 12)
F5_HI = FieldSpec(5, 1, 24)
F52 = FieldSpec(5, 2, 16)
F7 = FieldSpec(7, 1, 20)

INF = math.inf


def test_field_validation():
    with pytest.raises(ConfigError):
        FieldSpec(2, 1, 12)
    with pytest.raises(ConfigError):
        FieldSpec(9, 1, 12)
    with pytest.raises(ConfigError):
        FieldSpec(5, 0, 12)
    with pytest.raises(ConfigError):
        FieldSpec(5, 3, 8)  # prec < 4e


def test_add_embeds_integers():
    s = F5.from_int(2) + F5.from_int(3)
    assert s.valuation() == 1
    assert (s - F5.from_int(5)).is_zero_to_prec


def test_inverse_of_two_mod_125():
    # extended Euclid oracle: 2 * 63 = 126 = 1 mod 125
    assert pow(2, -1, 125) == 63
    half = F5.one() / F5.from_int(2)
    assert half.unit[0] % 125 == 63


def test_ramified_uniformizer_squares_to_p():
    pp = F52.pi_power(1) * F52.pi_power(1)
    assert pp.valuation() == 1
    assert (pp - F52.from_int(5)).is_zero_to_prec


def test_exact_zero_vs_zero_at_precision():
    z = F5.zero()
    assert z.is_exact_zero
    cancel = F5.from_int(7) - F5.from_int(7)
    assert cancel.is_zero_to_prec and not cancel.is_exact_zero
    with pytest.raises(ZeroDivisionError):
        F5.one() / z
    with pytest.raises(PrecisionError):
        F5.one() / cancel


def test_division_by_high_valuation_keeps_relative_digits():
    a = F5.from_int(5**8) - F5.from_int(5**8) + F5.from_int(2 * 5**8)
    b = F5.from_int(3 * 5**8)
    q = a / b
    assert q.vpi == 0 and q.prec > 0
    assert (q * b - a).is_zero_to_prec


rationals = st.fractions(
    min_value=Fraction(-10**6), max_value=Fraction(10**6),
    max_denominator=10**4).filter(lambda q: q != 0)


@settings(max_examples=120, deadline=None)
@given(rationals, rationals)
def test_valuation_rules(qa, qb):
    a, b = F5_HI.from_fraction(qa), F5_HI.from_fraction(qb)
    prod = a * b
    if not prod.is_zero_to_prec:
        assert prod.vmin_pi == a.vmin_pi + b.vmin_pi
    s = a + b
    if not s.is_zero_to_prec:
        assert s.vmin_pi >= min(a.vmin_pi, b.vmin_pi)
        if a.vmin_pi != b.vmin_pi:
            assert s.vmin_pi == min(a.vmin_pi, b.vmin_pi)


@settings(max_examples=100, deadline=None)
@given(rationals)
def test_literal_round_trip(q):
    x = F5.from_fraction(q)
    assert parse_scalar(format_scalar(x), F5) == x


@settings(max_examples=60, deadline=None)
@given(rationals, st.integers(min_value=0, max_value=3))
def test_literal_round_trip_ramified(q, k):
    x = F52.from_fraction(q) * F52.pi_power(k)
    assert parse_scalar(format_scalar(x), F52) == x


def test_literal_examples():
    x = parse_scalar("63*5^0", F5)
    assert x.unit[0] % 125 == 63
    y = parse_scalar("1*5^(1/2)", F52)
    assert y == F52.pi_power(1).reduce(F52.prec)


def test_exp_at_zero():
    assert padic_exp(F5.zero()) == F5.one()


def test_exp_of_p_matches_series_oracle():
    # independent oracle: sum p^i/i! as exact rationals, reduced mod 5^3
    F = FieldSpec(5, 1, 6)
    total = Fraction(0)
    for i in range(9):
        total += Fraction(5**i, math.factorial(i))
    num, den = total.numerator, total.denominator
    expected = num * pow(den, -1, 5**3) % 5**3
    assert expected == 81
    got = padic_exp(F.from_int(5))
    assert got.unit[0] % 125 == 81


def test_exp_homomorphism_on_random_units():
    import random

    rng = random.Random(20)
    for _ in range(20):
        z = rng.randrange(1, 5**6)
        x = F5.from_int(5 * z)
        y = F5.from_int(5 * (z + rng.randrange(1, 100)))
        lhs = padic_exp(x) * padic_exp(y)
        rhs = padic_exp(x + y)
        assert (lhs - rhs).is_zero_to_prec


def test_exp_precondition():
    with pytest.raises(PrecisionError):
        padic_exp(F5.from_int(2))  # v = 0 <= 1/(p-1)
    with pytest.raises(PrecisionError):
        padic_exp(FieldSpec(3, 4, 16).pi_power(1))  # 1/4 <= 1/2


def test_exp_injectivity_bound():
    # v(exp x - exp y) equals v(x - y) on the domain, so congruence mod
    # pi^N forces x = y mod pi^(N - e*ceil(e/(p-1)))
    import random

    rng = random.Random(7)
    slack = F5.prec - F5.e * math.ceil(F5.e / (F5.p - 1))
    for _ in range(25):
        x = F5.from_int(5 * rng.randrange(1, 5**9))
        y = F5.from_int(5 * rng.randrange(1, 5**9))
        if (padic_exp(x) - padic_exp(y)).is_zero_to_prec:
            assert (x - y).vmin_pi >= slack


def test_exp_ramified_field():
    x = F52.pi_power(3)  # v = 3/2 > 1/4
    ex = padic_exp(x)
    assert (ex - F52.one()).vmin_pi == 3
    assert (padic_exp(x + x) - ex * ex).is_zero_to_prec


def test_congruence_helper():
    assert congruent(F5.from_int(81), F5.from_int(81 + 125), 3)
    assert not congruent(F5.from_int(81), F5.from_int(82), 3)
