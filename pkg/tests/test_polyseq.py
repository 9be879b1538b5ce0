from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polystab.errors import ExponentOverflow, NegativeValue
from polystab.polyseq import (IntPolynomial, affine_density, difference_poly, eval_poly,
                              forward_difference, in_class_P, in_class_P0, monotone_threshold,
                              values)

P = IntPolynomial
COUNTER = P((3, -4, 2))


def brute_in_P(p, n_max=10**4):
    return all(p.value(n) >= 0 for n in range(1, n_max + 1))


def test_eval_examples():
    assert eval_poly(COUNTER, 1) == 1
    assert eval_poly(P((0, 1)), 7) == 7
    assert eval_poly(COUNTER, 3) == 9


def test_eval_errors():
    with pytest.raises(ExponentOverflow):
        eval_poly(P((0, 0, 0, 0, 1)), 10**5)
    with pytest.raises(NegativeValue):
        eval_poly(P((-5, 1)), 1)
    with pytest.raises(ValueError):
        eval_poly(COUNTER, 0)


def test_membership_examples():
    assert in_class_P(COUNTER)
    assert not in_class_P(P((-5, 1)))
    assert in_class_P0(P((0, 0, 1)))
    assert not in_class_P0(COUNTER)
    assert in_class_P(P(()))  # zero polynomial maps into N_0
    assert not in_class_P(P((0, -1)))


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=1, max_size=5))
def test_membership_matches_brute_force(coeffs):
    p = P(tuple(coeffs))
    assert in_class_P(p) == brute_in_P(p)


def test_values_forward_differences_match_horner():
    for p in (COUNTER, P((1, 2, 0, 3)), P((0, 1))):
        assert values(p, 500) == [p.value(n) for n in range(1, 501)]
        assert values(p, 20, start=5) == [p.value(n) for n in range(5, 21)]


def test_difference_poly_examples():
    assert difference_poly(P((0, 0, 1)), 0, 3) == P((9, 6))
    for n0, n in ((0, 1), (4, 9), (17, 2)):
        assert difference_poly(P((0, 1)), n0, n) == P((n,))
    assert difference_poly(COUNTER, 0, 1) == P((-2, 4))


def binomial_shift(coeffs, a):
    # independent expansion of sum c_i (X + a)^i
    out = [0] * len(coeffs)
    for i, c in enumerate(coeffs):
        for j in range(i + 1):
            out[j] += c * _binom(i, j) * a ** (i - j)
    return out


def _binom(n, k):
    r = 1
    for t in range(k):
        r = r * (n - t) // (t + 1)
    return r


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=2, max_size=5).filter(lambda c: c[-1] != 0),
       st.integers(0, 40), st.integers(1, 40))
def test_difference_poly_identity(coeffs, n0, n):
    p = P(tuple(coeffs))
    dq = difference_poly(p, n0, n)
    assert dq.degree == p.degree - 1
    hi, lo = binomial_shift(coeffs, n0 + n), binomial_shift(coeffs, n0)
    assert dq == P(tuple(a - b for a, b in zip(hi, lo)))
    for j in range(1, 101):
        assert dq.value(j) == p.value(n0 + j + n) - p.value(n0 + j)


def test_difference_poly_rejects_constant():
    with pytest.raises(ValueError):
        difference_poly(P((4,)), 0, 1)


def test_monotone_threshold_examples():
    assert monotone_threshold(P((0, 1))) == 1
    assert monotone_threshold(COUNTER) == 1
    assert monotone_threshold(P((9, -6, 1))) == 3


def test_monotone_threshold_property():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 60:
        coeffs = [int(c) for c in rng.integers(-20, 21, size=int(rng.integers(2, 5)))]
        coeffs[-1] = int(rng.integers(1, 21))
        p = P(tuple(coeffs))
        if not in_class_P(p):
            continue
        m = monotone_threshold(p)
        assert all(p.value(k + 1) > p.value(k) for k in range(m, m + 1000))
        if m > 1:
            assert p.value(m) <= p.value(m - 1)
        checked += 1


def test_forward_difference():
    assert forward_difference(COUNTER) == P((-2, 4))


def test_affine_density():
    assert affine_density(P((2, 3))) == Fraction(1, 3)
    with pytest.raises(ValueError):
        affine_density(COUNTER)


def test_coefficients_checked():
    with pytest.raises(ExponentOverflow):
        P((2**63,))
    with pytest.raises(ValueError):
        P((1.5,))
    assert P((1, 2, 0, 0)).degree == 1
    assert P((0, 0)).degree == -1
