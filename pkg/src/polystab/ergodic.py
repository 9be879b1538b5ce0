"""Polynomial multiple and entangled ergodic averages on matrix algebras.

The algebra is ``M_d(C)`` with normalized trace ``phi(a) = tr(a) / d`` and
automorphism ``beta(a) = u a u^-1`` for a unitary ``u``. For a surjection
``alpha: {1..k} -> {1..r}`` and polynomials ``p_1..p_r`` of class ``P`` the
two averages over ``n in {1..N}^r`` are

    multiple:   (1/N^r) sum  beta^{s_1}(a_1) beta^{s_2}(a_2) ... beta^{s_k}(a_k)
    entangled:  (1/N^r) sum  u^{e_1} A_1 u^{e_2} A_2 ... u^{e_k} A_k u^{-s_k}

with ``e_l = p_{alpha(l)}(n_{alpha(l)})`` and ``s_l = e_1 + ... + e_l``; they
agree term by term. In finite dimension every bounded set of matrices is
relatively compact, so the compactness hypotheses on the ``a_j`` hold
automatically and are not modelled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from . import numkit
from .errors import BudgetExceeded, ExponentOverflow
from .operators import Dense, DiagonalUnitary, Operator, unit_phase
from .polyseq import INT64_MAX, IntPolynomial, in_class_P, values as poly_values

DEFAULT_BUDGET = 10**8
CHUNK = 4096
MAX_R = 3


@dataclass(frozen=True)
class AverageRequest:
    """Index data of an average: ``alpha`` is 1-based, ``alpha[l-1] = alpha(l)``."""

    alpha: tuple
    polys: tuple

    def __post_init__(self):
        alpha = tuple(int(a) for a in self.alpha)
        polys = tuple(p if isinstance(p, IntPolynomial) else IntPolynomial(tuple(p))
                      for p in self.polys)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "polys", polys)
        if not alpha or not polys:
            raise ValueError("need k >= 1 and r >= 1")
        if len(polys) > len(alpha):
            raise ValueError("need r <= k")
        if set(alpha) != set(range(1, len(polys) + 1)):
            raise ValueError(f"alpha {alpha} is not a surjection onto 1..{len(polys)}")
        for p in polys:
            if not in_class_P(p):
                raise ValueError(f"polynomial {p} is not in class P")

    @property
    def k(self) -> int:
        return len(self.alpha)

    @property
    def r(self) -> int:
        return len(self.polys)

    @classmethod
    def linear(cls, k: int) -> "AverageRequest":
        """``r = 1``, ``p_1 = X``: the classical multiple average."""
        return cls((1,) * k, (IntPolynomial((0, 1)),))


def s_exponents(req: AverageRequest, ns: Sequence[int]) -> list[int]:
    """Prefix sums ``s_l = sum_{d<=l} p_{alpha(d)}(n_{alpha(d)})``."""
    if len(ns) != req.r:
        raise ValueError(f"need {req.r} indices")
    if any(n < 1 for n in ns):
        raise ValueError("indices start at 1")
    out, acc = [], 0
    for a in req.alpha:
        acc += req.polys[a - 1].value(ns[a - 1])
        if acc > INT64_MAX:
            raise ExponentOverflow(f"exponent {acc} exceeds 2**63 - 1")
        out.append(acc)
    return out


class UnitaryPowers:
    """Cached powers ``u^s`` and ``u^-s = (u*)^s``.

    Diagonal unitaries with rational angles are reduced exactly modulo their
    period. A dense unitary is diagonalized once, ``u = V diag(exp(2 pi i t_j)) V*``
    (Schur form of a normal matrix); ``s t_j mod 1`` is then reduced in exact
    integer arithmetic, since each float ``t_j`` is a dyadic rational. This
    keeps large powers unitary to rounding, whereas repeated squaring lets
    the unitarity defect grow linearly in ``s``.
    """

    def __init__(self, u):
        if isinstance(u, np.ndarray) or not isinstance(u, Operator):
            u = Dense(numkit.as_matrix(u))
        if not isinstance(u, (Dense, DiagonalUnitary)):
            raise TypeError("u must be a dense or diagonal unitary operator")
        self.op = u
        self.d = u.dim
        self._period = u.period() if isinstance(u, DiagonalUnitary) and u.is_rational else None
        self._spectral = None
        if isinstance(u, Dense):
            t, z = numkit.schur(u.matrix)
            turns = np.angle(np.diag(t)) / (2.0 * np.pi)
            self._spectral = (z, [Fraction(float(x)) for x in turns])
        self._cache: dict[int, np.ndarray] = {}

    def matrix(self) -> np.ndarray:
        if isinstance(self.op, Dense):
            return self.op.matrix
        return self.op.power_matrix(1)

    def _compute(self, s: int) -> np.ndarray:
        if self._spectral is None:
            return self.op.power_matrix(s)
        z, turns = self._spectral
        ph = np.array([unit_phase(Fraction((s * t.numerator) % t.denominator, t.denominator))
                       for t in turns])
        return (z * ph) @ numkit.adjoint(z)

    def power(self, s: int) -> np.ndarray:
        s = int(s)
        if s < 0:
            return numkit.adjoint(self.power(-s))
        key = s % self._period if self._period else s
        hit = self._cache.get(key)
        if hit is None:
            hit = self._compute(key)
            self._cache[key] = hit
        return hit

    def powers(self, exps: np.ndarray, sign: int = 1) -> np.ndarray:
        """Stack ``u^(sign * e)`` for an integer array ``exps``."""
        uniq, inv = np.unique(exps, return_inverse=True)
        mats = np.stack([self.power(sign * int(e)) for e in uniq])
        return mats[inv.ravel()]


@dataclass(eq=False)
class MatrixAlgebraSystem:
    """``(M_d(C), phi, beta)`` with ``phi = tr / d`` and ``beta = u . u^-1``."""

    u: object
    unitarity_tol: float = 1e-10
    powers: UnitaryPowers = field(init=False, repr=False)

    def __post_init__(self):
        self.powers = UnitaryPowers(self.u)
        m = self.powers.matrix()
        dev = np.abs(numkit.adjoint(m) @ m - np.eye(m.shape[0])).max()
        if dev > self.unitarity_tol:
            raise ValueError(f"u is not unitary (deviation {dev:.3e})")

    @property
    def d(self) -> int:
        return self.powers.d

    def phi(self, a) -> complex:
        return complex(np.trace(a)) / self.d

    def phi_norm(self, b) -> float:
        return math.sqrt(max(self.phi(numkit.adjoint(b) @ b).real, 0.0))

    def beta(self, a, s: int = 1) -> np.ndarray:
        return self.powers.power(s) @ a @ self.powers.power(-s)


def _as_system(sys_or_u) -> MatrixAlgebraSystem:
    return sys_or_u if isinstance(sys_or_u, MatrixAlgebraSystem) else MatrixAlgebraSystem(sys_or_u)


def _exponent_tables(req: AverageRequest, n: int) -> list[np.ndarray]:
    tables = [poly_values(p, n) for p in req.polys]
    worst = sum(max(tables[a - 1]) for a in req.alpha)
    if worst > INT64_MAX:
        raise ExponentOverflow(f"exponent sums reach {worst} > 2**63 - 1")
    return [np.array(t, dtype=np.int64) for t in tables]


def _check_budget(req: AverageRequest, n: int, budget: int) -> None:
    if req.r > MAX_R:
        raise BudgetExceeded(f"r = {req.r} exceeds the supported maximum {MAX_R}")
    if n < 1:
        raise ValueError("N must be positive")
    if n**req.r * req.k > budget:
        raise BudgetExceeded(f"N^r * k = {n**req.r * req.k} exceeds budget {budget}")


def _pairwise_sum(parts: list[np.ndarray]) -> np.ndarray:
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def _grid_average(powers: UnitaryPowers, mats: list[np.ndarray], req: AverageRequest,
                  n: int, form: str, budget: int) -> np.ndarray:
    _check_budget(req, n, budget)
    if len(mats) != req.k:
        raise ValueError(f"need {req.k} matrices, got {len(mats)}")
    mats = [numkit.as_matrix(a) for a in mats]
    d = powers.d
    if any(a.shape != (d, d) for a in mats):
        raise ValueError(f"matrices must be {d}x{d}")
    tables = _exponent_tables(req, n)
    total = n**req.r
    radix = [n ** (req.r - 1 - i) for i in range(req.r)]
    chunk_sums = []
    for start in range(0, total, CHUNK):
        lin = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        idx = [(lin // radix[i]) % n for i in range(req.r)]  # zero-based n_i - 1
        e = [tables[a - 1][idx[a - 1]] for a in req.alpha]
        s = np.cumsum(np.vstack(e), axis=0)
        m = lin.size
        if form == "multiple":
            acc = np.broadcast_to(np.eye(d, dtype=complex), (m, d, d))
            for l, a in enumerate(mats):
                term = powers.powers(s[l]) @ a @ powers.powers(s[l], -1)
                acc = acc @ term
        elif form == "entangled":
            acc = np.broadcast_to(np.eye(d, dtype=complex), (m, d, d))
            for l, a in enumerate(mats):
                acc = acc @ powers.powers(e[l]) @ a
            acc = acc @ powers.powers(s[-1], -1)
        else:
            raise ValueError(f"unknown form {form!r}")
        chunk_sums.append(np.add.reduce(acc, axis=0))
    return _pairwise_sum(chunk_sums) / total


def multiple_average(sys, as_: Sequence, req: AverageRequest, n: int,
                     budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """``(1/N^r) sum beta^{s_1}(a_1) ... beta^{s_k}(a_k)`` over ``{1..N}^r``."""
    system = _as_system(sys)
    return _grid_average(system.powers, list(as_), req, n, "multiple", budget)


def entangled_average(u, As: Sequence, req: AverageRequest, n: int,
                      budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """``(1/N^r) sum u^{e_1} A_1 ... u^{e_k} A_k u^{-s_k}`` over ``{1..N}^r``."""
    powers = u.powers if isinstance(u, MatrixAlgebraSystem) else UnitaryPowers(u)
    return _grid_average(powers, list(As), req, n, "entangled", budget)


def weyl_phase_mean(turns: Fraction, p: IntPolynomial) -> complex:
    """Exact limit of ``(1/N) sum_{n<=N} exp(2 pi i turns p(n))`` for rational ``turns``.

    ``p(n) mod q`` is ``q``-periodic for the denominator ``q`` of ``turns``,
    so the limit equals the mean over one period.
    """
    turns = Fraction(turns)
    q = turns.denominator
    vals = [unit_phase(turns * (p.value(n) % q)) for n in range(1, q + 1)]
    return complex(math.fsum(v.real for v in vals) / q, math.fsum(v.imag for v in vals) / q)


def weyl_oracle(angles: Sequence, As: Sequence, req: AverageRequest) -> np.ndarray:
    """Exact ``N -> inf`` limit of the entangled average for ``u = diag(exp(2 pi i theta_j))``.

    Entrywise, each index path ``i_0, ..., i_k`` contributes
    ``prod A_l[i_{l-1}, i_l]`` times, for every variable ``m``, the phase
    mean of ``eta_m^{p_m(n)}`` where
    ``eta_m = prod_{l : alpha(l) = m} exp(2 pi i (theta_{i_{l-1}} - theta_{i_k}))``.
    """
    thetas = []
    for a in angles:
        if isinstance(a, float):
            raise ValueError("weyl_oracle needs rational angles (roots of unity)")
        thetas.append(Fraction(a))
    d = len(thetas)
    mats = [numkit.as_matrix(a) for a in As]
    if len(mats) != req.k or any(m.shape != (d, d) for m in mats):
        raise ValueError("matrices do not match the request or the dimension")
    groups = [[l for l, a in enumerate(req.alpha) if a == m + 1] for m in range(req.r)]
    cache: dict[tuple[int, Fraction], complex] = {}
    out = np.zeros((d, d), dtype=complex)
    for path in product(range(d), repeat=req.k + 1):
        w = 1.0 + 0j
        for l in range(req.k):
            w *= mats[l][path[l], path[l + 1]]
            if w == 0:
                break
        if w == 0:
            continue
        last = thetas[path[-1]]
        for m, ls in enumerate(groups):
            eta = sum((thetas[path[l]] - last for l in ls), Fraction(0)) % 1
            key = (m, eta)
            if key not in cache:
                cache[key] = weyl_phase_mean(eta, req.polys[m])
            w *= cache[key]
        out[path[0], path[-1]] += w
    return out


@dataclass(eq=False)
class AverageSeries:
    """Averages ``S_N`` on a horizon grid with Cauchy diagnostics.

    ``phi_deltas[i]`` and ``op_deltas[i]`` compare grid points ``i`` and
    ``i + 1`` (``||S_{2N} - S_N||`` on a doubling grid).
    """

    grid: list
    values: list
    phi_deltas: list
    op_deltas: list
    bound: float

    def within_bound(self, slack: float = 1e-9) -> bool:
        return all(np.linalg.norm(v, 2) <= self.bound + slack for v in self.values)

    def to_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "values": [[[[z.real, z.imag] for z in row] for row in v] for v in self.values],
            "phi_deltas": self.phi_deltas,
            "op_deltas": self.op_deltas,
            "bound": self.bound,
        }


def average_series(sys, as_: Sequence, req: AverageRequest, grid: Sequence[int],
                   form: str = "multiple", budget: int = DEFAULT_BUDGET) -> AverageSeries:
    system = _as_system(sys)
    vals = [_grid_average(system.powers, list(as_), req, int(n), form, budget) for n in grid]
    phi_d = [system.phi_norm(b - a) for a, b in zip(vals, vals[1:])]
    op_d = [float(np.linalg.norm(b - a, 2)) for a, b in zip(vals, vals[1:])]
    bound = float(np.prod([np.linalg.norm(numkit.as_matrix(a), 2) for a in as_]))
    return AverageSeries([int(n) for n in grid], vals, phi_d, op_d, bound)


def gns_weak_series(sys, a0, series: AverageSeries) -> np.ndarray:
    """``phi(a0 S_N)`` along the grid of ``series``."""
    system = _as_system(sys)
    a0 = numkit.as_matrix(a0)
    return np.array([system.phi(a0 @ v) for v in series.values])


@dataclass
class EquivalenceReport:
    n: int
    max_discrepancy: float
    phi_delta_multiple: float | None = None
    phi_delta_entangled: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def equivalence_check(sys, as_: Sequence, req: AverageRequest, n: int, cauchy: bool = True,
                      budget: int = DEFAULT_BUDGET) -> EquivalenceReport:
    """Evaluate both averages on the same data and compare them entrywise.

    With ``cauchy`` the ``phi``-norm differences ``||S_{2N} - S_N||`` of both
    forms are reported as well.
    """
    system = _as_system(sys)
    mult = _grid_average(system.powers, list(as_), req, n, "multiple", budget)
    ent = _grid_average(system.powers, list(as_), req, n, "entangled", budget)
    rep = EquivalenceReport(n, float(np.abs(mult - ent).max()))
    if cauchy:
        mult2 = _grid_average(system.powers, list(as_), req, 2 * n, "multiple", budget)
        ent2 = _grid_average(system.powers, list(as_), req, 2 * n, "entangled", budget)
        rep.phi_delta_multiple = system.phi_norm(mult2 - mult)
        rep.phi_delta_entangled = system.phi_norm(ent2 - ent)
    return rep


def random_case(rng: np.random.Generator, max_d: int = 4, max_k: int = 3, max_r: int = 2,
                max_n: int = 50):
    """Seeded random input for the multiple/entangled identity."""
    from .batteries import random_matrix, random_unitary

    d = int(rng.integers(1, max_d + 1))
    k = int(rng.integers(1, max_k + 1))
    r = int(rng.integers(1, min(k, max_r) + 1))
    alpha = list(range(1, r + 1)) + [int(x) for x in rng.integers(1, r + 1, size=k - r)]
    rng.shuffle(alpha)
    polys = []
    for _ in range(r):
        deg = int(rng.integers(1, 4))
        coeffs = [int(c) for c in rng.integers(0, 4, size=deg + 1)]
        coeffs[-1] = max(coeffs[-1], 1)
        polys.append(IntPolynomial(tuple(coeffs)))
    req = AverageRequest(tuple(alpha), tuple(polys))
    if rng.random() < 0.5:
        u = random_unitary(d, rng)
    else:
        u = DiagonalUnitary(tuple(Fraction(int(rng.integers(0, 12)), 12) for _ in range(d)))
    mats = [random_matrix(d, rng) / np.sqrt(2 * d) for _ in range(k)]
    n = int(rng.integers(1, max_n + 1))
    return MatrixAlgebraSystem(u), mats, req, n


def report_json(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True)
