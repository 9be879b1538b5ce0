"""Integer polynomials: class membership, difference polynomials, thresholds.

``P`` is the set of integer polynomials mapping the positive integers into the
nonnegative integers, ``P0`` those mapping the nonnegative integers into the
nonnegative integers and vanishing at 0. All coefficient and value arithmetic
is checked against the signed 64-bit range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .errors import ExponentOverflow, NegativeValue

INT64_MAX = 2**63 - 1
INT64_MIN = -(2**63)


def _checked(x: int) -> int:
    if x > INT64_MAX or x < INT64_MIN:
        raise ExponentOverflow(f"integer {x} leaves the 64-bit range")
    return x


@dataclass(frozen=True)
class IntPolynomial:
    """Polynomial with integer coefficients, constant term first.

    ``IntPolynomial((3, -4, 2))`` is ``2X^2 - 4X + 3``. Trailing zero
    coefficients are stripped; the zero polynomial has no coefficients.
    """

    coeffs: tuple[int, ...]

    def __post_init__(self):
        cs = [int(c) for c in self.coeffs]
        for c, orig in zip(cs, self.coeffs):
            if c != orig:
                raise ValueError("coefficients must be integers")
            _checked(c)
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_list(cls, coeffs: Sequence[int]) -> "IntPolynomial":
        return cls(tuple(coeffs))

    @property
    def degree(self) -> int:
        """Degree; ``-1`` for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def value(self, n: int) -> int:
        """Exact Horner value at any integer ``n``, with checked arithmetic."""
        acc = 0
        for c in reversed(self.coeffs):
            acc = _checked(_checked(acc * n) + c)
        return acc

    __call__ = value

    def taylor_shift(self, a: int) -> "IntPolynomial":
        """Coefficients of ``p(X + a)``."""
        out = [0] * len(self.coeffs)
        for i, c in enumerate(self.coeffs):
            # c * (X + a)^i
            for j in range(i + 1):
                out[j] = _checked(out[j] + _checked(c * math.comb(i, j) * a ** (i - j)))
        return IntPolynomial(tuple(out))

    def __sub__(self, other: "IntPolynomial") -> "IntPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return IntPolynomial(tuple(_checked(x - y) for x, y in zip(a, b)))

    def root_bound(self) -> Fraction:
        """Cauchy bound: every complex root has modulus below this value."""
        if self.degree < 1:
            return Fraction(0)
        lead = abs(self.leading)
        return 1 + Fraction(max(abs(c) for c in self.coeffs[:-1]), lead)

    @cached_property
    def _member_p(self) -> bool:
        return _nonnegative_from(self, 1)

    @cached_property
    def _member_p0(self) -> bool:
        return self.value(0) == 0 and _nonnegative_from(self, 0)

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mag = abs(c)
            body = "X" if i == 1 else f"X^{i}" if i > 1 else ""
            coef = "" if (mag == 1 and i > 0) else str(mag)
            sign = "-" if c < 0 else "+"
            terms.append((sign, coef + body))
        first_sign, first = terms[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, t in terms[1:]:
            text += f" {sign} {t}"
        return text


def _nonnegative_from(p: IntPolynomial, start: int) -> bool:
    if p.degree < 1:
        return p.leading >= 0
    if p.leading < 0:
        return False
    stop = math.ceil(p.root_bound())
    return all(p.value(n) >= 0 for n in range(start, max(stop, start) + 1))


def in_class_P(p: IntPolynomial) -> bool:
    """Membership in ``P``: ``p(n) >= 0`` for every positive integer ``n``."""
    return p._member_p


def in_class_P0(p: IntPolynomial) -> bool:
    """Membership in ``P0``: ``p(0) = 0`` and ``p(n) >= 0`` for all ``n >= 0``."""
    return p._member_p0


def eval_poly(p: IntPolynomial, n: int) -> int:
    """Value of a polynomial of class ``P`` at a positive integer."""
    if n < 1:
        raise ValueError("polynomials of class P are evaluated at n >= 1")
    if not in_class_P(p):
        raise NegativeValue(f"{p} is not in class P")
    v = p.value(n)
    if v < 0:
        raise NegativeValue(f"{p} is negative at {n}")
    return v


def values(p: IntPolynomial, n_max: int, start: int = 1) -> list[int]:
    """``[p(start), ..., p(n_max)]`` by checked forward differences."""
    if n_max < start:
        return []
    # forward difference table seeded at start
    d = max(p.degree, 0)
    diffs = [p.value(start + i) for i in range(d + 1)]
    for level in range(1, d + 1):
        for i in range(d, level - 1, -1):
            diffs[i] = _checked(diffs[i] - diffs[i - 1])
    out = []
    for _ in range(n_max - start + 1):
        out.append(diffs[0])
        for i in range(d):
            diffs[i] = _checked(diffs[i] + diffs[i + 1])
    return out


def difference_poly(p: IntPolynomial, n0: int, n: int) -> IntPolynomial:
    """``X -> p(n0 + X + n) - p(n0 + X)``, of degree ``deg p - 1``."""
    if p.degree < 1:
        raise ValueError("difference polynomials need a non-constant polynomial")
    if n0 < 0 or n < 1:
        raise ValueError("need n0 >= 0 and n >= 1")
    return p.taylor_shift(n0 + n) - p.taylor_shift(n0)


def forward_difference(p: IntPolynomial) -> IntPolynomial:
    return p.taylor_shift(1) - p


def monotone_threshold(p: IntPolynomial) -> int:
    """Least ``n0 >= 1`` with ``p(m + 1) > p(m)`` for every ``m >= n0``."""
    if p.degree < 1:
        raise ValueError("monotone_threshold needs a non-constant polynomial")
    if not in_class_P(p):
        raise NegativeValue(f"{p} is not in class P")
    q = forward_difference(p)
    m = max(1, math.ceil(q.root_bound()))
    # q > 0 beyond its root bound; walk down while it stays positive
    while m > 1 and q.value(m - 1) > 0:
        m -= 1
    return m


def affine_density(p: IntPolynomial) -> Fraction:
    """Density ``1/a`` of the range of ``aX + b`` inside the positive integers."""
    if p.degree != 1 or p.leading < 1:
        raise ValueError("affine_density needs aX + b with a >= 1")
    return Fraction(1, p.leading)
