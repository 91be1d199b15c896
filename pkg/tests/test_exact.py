from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liminf.errors import PreconditionError
from liminf.exact import (
    factorize,
    fmt_rational,
    iroot,
    is_rational_power,
    mixed_sign,
    parse_rational,
    power_enclosure,
    rational_power_lt,
    sign_of,
)
from oracles import mp_sign

taus = st.sampled_from([Fraction(3), Fraction(7, 2), Fraction(5, 3), Fraction(9, 4), Fraction(2)])


@given(st.integers(0, 10**40), st.integers(1, 7))
def test_iroot_brackets(n, k):
    m = iroot(n, k)
    assert m**k <= n < (m + 1) ** k


@given(st.integers(1, 10**7))
def test_factorize_multiplies_back(n):
    prod = 1
    for p, e in factorize(n):
        prod *= p**e
    assert prod == n


@settings(max_examples=300)
@given(st.integers(0, 2000), st.integers(1, 2000), st.integers(2, 500), st.integers(2, 500), taus,
       st.sampled_from([-1, 1]))
def test_sign_of_matches_high_precision(num, den, q1, q2, tau, s):
    expect = mp_sign(num, den, [(s, q1), (-1, q2)], tau)
    assert sign_of(Fraction(num, den), [(s, q1), (-1, q2)], tau) == expect


def test_sign_of_exact_ties():
    # 1/8 - 2^-3 and 1/4 - 16^(-1/2)
    assert sign_of(Fraction(1, 8), [(-1, 2)], 3) == 0
    assert sign_of(Fraction(1, 4), [(-1, 16)], Fraction(1, 2)) == 0
    # 8^(-3/2) = 2^(-3/2) / 8: an irrational tie across different q
    assert sign_of(0, [(8, 8), (-1, 2)], Fraction(3, 2)) == 0
    assert sign_of(0, [(1, 8), (-1, 2)], Fraction(1, 2)) == -1


def test_mixed_sign_per_term_exponents():
    # 4^(-1/2) = 1/2, 2^(-1) = 1/2
    assert mixed_sign(0, [(1, 4, Fraction(1, 2)), (-1, 2, 1)]) == 0
    # 2^(-1/2) vs 8^(-1/6) are equal
    assert mixed_sign(0, [(1, 2, Fraction(1, 2)), (-1, 8, Fraction(1, 6))]) == 0
    assert mixed_sign(Fraction(1, 10**9), [(1, 2, Fraction(1, 2)), (-1, 8, Fraction(1, 6))]) == 1


@given(st.integers(2, 10**4), taus)
def test_power_enclosure_brackets(q, tau):
    lo, hi = power_enclosure(q, tau, 80)
    v = mpmath.power(q, -mpmath.mpf(tau.numerator) / tau.denominator)
    assert lo <= hi
    assert mpmath.mpf(lo.numerator) / lo.denominator <= v * (1 + mpmath.mpf(10) ** -40)
    assert mpmath.mpf(hi.numerator) / hi.denominator >= v * (1 - mpmath.mpf(10) ** -40)


def test_rational_power_helpers():
    assert is_rational_power(4, Fraction(1, 2))
    assert not is_rational_power(2, Fraction(1, 2))
    assert rational_power_lt(Fraction(1, 9), 2, 3)
    assert not rational_power_lt(Fraction(1, 8), 2, 3)


def test_parse_and_format():
    assert parse_rational("7/2") == Fraction(7, 2)
    assert parse_rational("0.25") == Fraction(1, 4)
    assert parse_rational(3) == 3
    assert fmt_rational(Fraction(3)) == "3/1"
    with pytest.raises(PreconditionError):
        parse_rational(0.5)
    with pytest.raises(PreconditionError):
        parse_rational("x/2")
