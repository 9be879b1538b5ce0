"""Operators on finite- and countable-dimensional inner-product spaces.

Finite-dimensional vectors are complex ``numpy`` arrays. Vectors of the
countable-dimensional spaces ``l2(Z)`` and ``l2(N0)`` are
:class:`SupportVector` instances (finitely supported index maps), on which
the shift operators act by exact index translation, so ``power_apply`` with
exponents near ``2**63`` costs the same as with exponent 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import numkit
from .errors import BudgetExceeded, DimensionError, ExponentOverflow

INT64_MAX = 2**63 - 1
COUNTABLE = "countable"

Angle = Union[Fraction, float]


class SupportVector:
    """Finitely supported vector ``{index: coefficient}`` over integer indices."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[int, complex] | None = None):
        items = {} if coeffs is None else dict(coeffs)
        clean = {}
        for k, c in items.items():
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError("non-finite coefficient")
            if c != 0:
                clean[int(k)] = c
        self._coeffs = clean

    @classmethod
    def basis(cls, index: int, coeff: complex = 1.0) -> "SupportVector":
        return cls({index: coeff})

    @property
    def support(self) -> list[int]:
        return sorted(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def get(self, index: int) -> complex:
        return self._coeffs.get(index, 0j)

    def __len__(self) -> int:
        return len(self._coeffs)

    def __eq__(self, other) -> bool:
        return isinstance(other, SupportVector) and self._coeffs == other._coeffs

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {c}" for k, c in sorted(self._coeffs.items()))
        return f"SupportVector({{{body}}})"

    def norm_squared(self) -> float:
        return math.fsum(abs(c) ** 2 for c in self._coeffs.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def scaled(self, factor: complex) -> "SupportVector":
        return SupportVector({k: factor * c for k, c in self._coeffs.items()})

    def translated(self, offset: int, factor: complex = 1.0, min_index: int | None = None):
        out = {}
        for k, c in self._coeffs.items():
            j = k + offset
            if min_index is not None and j < min_index:
                continue
            out[j] = factor * c
        return SupportVector(out)

    def __add__(self, other: "SupportVector") -> "SupportVector":
        out = dict(self._coeffs)
        for k, c in other._coeffs.items():
            out[k] = out.get(k, 0j) + c
        return SupportVector(out)


def vector_inner(g, v) -> complex:
    """``<g, v>``, conjugate-linear in ``g``; exact finite sum for support vectors."""
    if isinstance(g, SupportVector) or isinstance(v, SupportVector):
        if not (isinstance(g, SupportVector) and isinstance(v, SupportVector)):
            raise DimensionError("cannot pair a support vector with a dense vector")
        small, big = (g, v) if len(g) <= len(v) else (v, g)
        terms = [np.conj(g.get(k)) * v.get(k) for k, _ in small.items() if big.get(k) != 0]
        return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    return numkit.inner(g, v)


def vector_norm(v) -> float:
    if isinstance(v, SupportVector):
        return v.norm()
    return numkit.norm(v)


def check_exponent(n) -> int:
    n = int(n)
    if n < 0:
        raise ValueError(f"exponent must be nonnegative, got {n}")
    if n > INT64_MAX:
        raise ExponentOverflow(f"exponent {n} exceeds 2**63 - 1")
    return n


def _as_angle(theta) -> Angle:
    if isinstance(theta, Fraction):
        return theta
    if isinstance(theta, int):
        return Fraction(theta)
    if isinstance(theta, str):
        return Fraction(theta)
    return float(theta)


def unit_phase(turns: Fraction | float) -> complex:
    """``exp(2 pi i * turns)`` with exact reduction of ``turns`` modulo 1."""
    frac = Fraction(turns) % 1
    # exact values at multiples of a quarter turn
    quarter = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
    if frac in quarter:
        return quarter[frac]
    x = 2.0 * math.pi * float(frac)
    return complex(math.cos(x), math.sin(x))


class Operator:
    """Bounded linear operator; subclasses implement the structured kinds."""

    kind: str = "abstract"

    @property
    def dim(self):
        raise NotImplementedError

    def apply(self, v):
        return self.power_apply(1, v)

    def adjoint(self) -> "Operator":
        raise NotImplementedError

    def adjoint_apply(self, v):
        return self.adjoint().apply(v)

    def power_apply(self, n: int, v):
        raise NotImplementedError

    def is_contraction(self, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    def _check_dense(self, v) -> np.ndarray:
        if isinstance(v, SupportVector):
            raise DimensionError(f"{self.kind} acts on dense vectors")
        v = numkit.as_vector(v)
        if v.shape[0] != self.dim:
            raise DimensionError(f"vector of length {v.shape[0]} for operator of dimension {self.dim}")
        return v


@dataclass(frozen=True, eq=False)
class Dense(Operator):
    """Operator given by a dense matrix.

    ``max_flops`` caps the cost ``2 * bit_length(n) * d**3`` of a single
    ``power_apply``.
    """

    matrix: np.ndarray
    max_flops: float = 1e10
    kind = "dense"

    def __post_init__(self):
        m = numkit.as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionError("dense operator must be square")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def adjoint(self) -> "Dense":
        return Dense(numkit.adjoint(self.matrix), self.max_flops)

    def power_matrix(self, n: int) -> np.ndarray:
        n = check_exponent(n)
        cost = 2.0 * max(n.bit_length(), 1) * self.dim**3
        if cost > self.max_flops:
            raise BudgetExceeded(f"power {n} of a {self.dim}x{self.dim} matrix exceeds the flop budget")
        return numkit.mat_power(self.matrix, n)

    def power_apply(self, n: int, v):
        v = self._check_dense(v)
        n = check_exponent(n)
        if n <= 8:
            for _ in range(n):
                v = self.matrix @ v
            return v
        return self.power_matrix(n) @ v

    def is_contraction(self, tol: float = 1e-9) -> bool:
        return numkit.op_norm(self.matrix) <= 1.0 + tol

    def to_spec(self) -> dict:
        return {"kind": "dense", "entries": _encode_matrix(self.matrix)}


@dataclass(frozen=True, eq=False)
class DiagonalUnitary(Operator):
    """``diag(exp(2 pi i theta_j))``; angles are fractions of a full turn.

    Angles given as :class:`~fractions.Fraction` are reduced exactly; float
    angles are converted to their exact binary fractions before reduction, so
    phases stay accurate for exponents up to ``2**63``.
    """

    angles: tuple
    kind = "diag_unitary"

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(_as_angle(a) for a in self.angles))

    @property
    def dim(self) -> int:
        return len(self.angles)

    @property
    def is_rational(self) -> bool:
        return all(isinstance(a, Fraction) for a in self.angles)

    def period(self) -> int:
        """Common order of the eigenvalues (rational angles only)."""
        if not self.is_rational:
            raise ValueError("period is defined for rational angles only")
        return math.lcm(*(a.denominator for a in self.angles)) if self.angles else 1

    def phases(self, n: int) -> np.ndarray:
        n = check_exponent(n)
        return np.array([unit_phase(n * Fraction(a)) for a in self.angles], dtype=complex)

    def power_matrix(self, n: int) -> np.ndarray:
        return np.diag(self.phases(n))

    def adjoint(self) -> "DiagonalUnitary":
        return DiagonalUnitary(tuple(-a for a in self.angles))

    def power_apply(self, n: int, v):
        v = self._check_dense(v)
        return self.phases(n) * v

    def is_contraction(self, tol: float = 1e-9) -> bool:
        return True

    def to_spec(self) -> dict:
        return {"kind": "diag_unitary", "angles": [_encode_angle(a) for a in self.angles]}


@dataclass(frozen=True, eq=False)
class BilateralShift(Operator):
    """Shift ``e_k -> weight * e_{k+step}`` on ``l2(Z)``; ``step`` is +1 or -1."""

    weight: complex = 1.0
    step: int = 1
    kind = "bilateral_shift"

    def __post_init__(self):
        if self.step not in (1, -1):
            raise ValueError("step must be +1 or -1")

    @property
    def dim(self):
        return COUNTABLE

    def adjoint(self) -> "BilateralShift":
        return BilateralShift(np.conj(self.weight), -self.step)

    def power_apply(self, n: int, v):
        if not isinstance(v, SupportVector):
            raise DimensionError("bilateral shift acts on support vectors")
        n = check_exponent(n)
        factor = 1.0 if self.weight == 1 else complex(self.weight) ** n
        return v.translated(self.step * n, factor)

    def is_contraction(self, tol: float = 1e-9) -> bool:
        return abs(self.weight) <= 1.0 + tol

    def to_spec(self) -> dict:
        spec = {"kind": "bilateral_shift"}
        if self.weight != 1:
            spec["weight"] = _encode_scalar(self.weight)
        if self.step != 1:
            spec["step"] = self.step
        return spec


@dataclass(frozen=True, eq=False)
class UnilateralShift(Operator):
    """Forward shift ``e_k -> weight * e_{k+1}`` on ``l2(N0)``, or its adjoint."""

    weight: complex = 1.0
    backward: bool = False
    kind = "unilateral_shift"

    @property
    def dim(self):
        return COUNTABLE

    def adjoint(self) -> "UnilateralShift":
        return UnilateralShift(np.conj(self.weight), not self.backward)

    def power_apply(self, n: int, v):
        if not isinstance(v, SupportVector):
            raise DimensionError("unilateral shift acts on support vectors")
        if v.support and v.support[0] < 0:
            raise DimensionError("unilateral shift acts on nonnegative indices")
        n = check_exponent(n)
        factor = 1.0 if self.weight == 1 else complex(self.weight) ** n
        if self.backward:
            return v.translated(-n, factor, min_index=0)
        return v.translated(n, factor)

    def is_contraction(self, tol: float = 1e-9) -> bool:
        return abs(self.weight) <= 1.0 + tol

    def to_spec(self) -> dict:
        spec = {"kind": "unilateral_shift"}
        if self.weight != 1:
            spec["weight"] = _encode_scalar(self.weight)
        if self.backward:
            spec["backward"] = True
        return spec


@dataclass(frozen=True, eq=False)
class DirectSum(Operator):
    """Blockwise operator. Vectors are sequences of block vectors; when every
    block is finite-dimensional a flat array is accepted as well."""

    blocks: tuple = field(default_factory=tuple)
    kind = "direct_sum"

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ValueError("direct sum needs at least one block")

    @property
    def dim(self):
        dims = [b.dim for b in self.blocks]
        if COUNTABLE in dims:
            return COUNTABLE
        return sum(dims)

    def split(self, v) -> list:
        if isinstance(v, np.ndarray) or (isinstance(v, Sequence) and v and np.isscalar(v[0])):
            if self.dim == COUNTABLE:
                raise DimensionError("flat vectors need finite-dimensional blocks")
            v = numkit.as_vector(v)
            if v.shape[0] != self.dim:
                raise DimensionError("flat vector has the wrong length")
            cuts = np.cumsum([b.dim for b in self.blocks])[:-1]
            return list(np.split(v, cuts))
        parts = list(v)
        if len(parts) != len(self.blocks):
            raise DimensionError("one component per block expected")
        return parts

    def _join(self, parts, like):
        if isinstance(like, np.ndarray) or (isinstance(like, Sequence) and like and np.isscalar(like[0])):
            return np.concatenate(parts)
        return parts

    def adjoint(self) -> "DirectSum":
        return DirectSum(tuple(b.adjoint() for b in self.blocks))

    def power_apply(self, n: int, v):
        parts = self.split(v)
        return self._join([b.power_apply(n, p) for b, p in zip(self.blocks, parts)], v)

    def is_contraction(self, tol: float = 1e-9) -> bool:
        return all(b.is_contraction(tol) for b in self.blocks)

    def to_spec(self) -> dict:
        return {"kind": "direct_sum", "blocks": [b.to_spec() for b in self.blocks]}


def apply(op: Operator, v):
    return op.apply(v)


def adjoint(op: Operator) -> Operator:
    return op.adjoint()


def power_apply(op: Operator, n: int, v):
    return op.power_apply(n, v)


def is_contraction(op: Operator, tol: float = 1e-9) -> bool:
    return op.is_contraction(tol)


def to_dense_vector(v) -> np.ndarray:
    return numkit.as_vector(v)


def orbit_inner(op: Operator, h, g, exponents: Iterable[int]) -> list[complex]:
    """``<g, T^n h>`` for each ``n`` in the ascending list ``exponents``.

    The orbit is advanced incrementally by the gaps between exponents.
    """
    exps = [check_exponent(n) for n in exponents]
    if any(b < a for a, b in zip(exps, exps[1:])):
        raise ValueError("exponents must be sorted ascending")
    out = []
    current, pos = h, 0
    for n in exps:
        if n != pos:
            current = op.power_apply(n - pos, current)
            pos = n
        out.append(vector_inner(g, current))
    return out


def _encode_scalar(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _encode_matrix(m: np.ndarray) -> list:
    return [[_encode_scalar(z) for z in row] for row in m]


def _encode_angle(a: Angle):
    if isinstance(a, Fraction):
        return str(a) if a.denominator != 1 else a.numerator
    return a


def decode_scalar(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError("complex scalars are [re, im] pairs")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, Mapping):
        return complex(float(x.get("re", 0.0)), float(x.get("im", 0.0)))
    return complex(float(x))


def decode_matrix(rows) -> np.ndarray:
    return np.array([[decode_scalar(z) for z in row] for row in rows], dtype=complex)


def decode_vector(spec):
    """Vector from config: list of scalars, or ``{"support": {index: scalar}}``."""
    if isinstance(spec, Mapping):
        if "support" not in spec:
            raise ValueError("vector objects need a 'support' map")
        return SupportVector({int(k): decode_scalar(c) for k, c in spec["support"].items()})
    return np.array([decode_scalar(z) for z in spec], dtype=complex)


def operator_from_spec(spec: Mapping) -> Operator:
    """Build an operator from its config description (see :meth:`Operator.to_spec`)."""
    kind = spec.get("kind")
    if kind == "dense":
        return Dense(decode_matrix(spec["entries"]))
    if kind == "diag_unitary":
        return DiagonalUnitary(tuple(spec["angles"]))
    if kind == "bilateral_shift":
        return BilateralShift(decode_scalar(spec.get("weight", 1.0)), int(spec.get("step", 1)))
    if kind == "unilateral_shift":
        return UnilateralShift(decode_scalar(spec.get("weight", 1.0)), bool(spec.get("backward", False)))
    if kind == "direct_sum":
        return DirectSum(tuple(operator_from_spec(b) for b in spec["blocks"]))
    raise ValueError(f"unknown operator kind {kind!r}")
