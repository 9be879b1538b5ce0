"""Flow on the circle plus an inward spiral, and its Koopman semigroup.

The compact set is ``S = Gamma  u  gamma(R)``: the unit circle with fixed
point 1 and a homoclinic orbit through -1, together with the curve
``gamma(t) = r(t) exp(i omega(t))`` in the open disk. The flow translates
the curve parameter. Sampled along ``p(n) = 2n^2 - 4n + 3`` the curve tends
to -1, although the Koopman operator of the time-1 map is almost weakly
stable.

Angles are handled in units of pi (``angle_over_pi``) so that integer
multiples of pi stay exact; reduction modulo 2 happens only when embedding.
All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .orbitlab import SubsequenceSelection, cesaro, fmt, kvn_extract
from .polyseq import IntPolynomial, values as poly_values

COUNTER_POLY = IntPolynomial((3, -4, 2))


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def radius(t):
    """``1 - 1/(2t)`` for ``t >= 1``, ``exp(t - 1)/2`` for ``t <= 1``."""
    t_arr = np.asarray(t, dtype=float)
    safe = np.where(t_arr >= 1.0, t_arr, 1.0)
    low = np.where(t_arr <= 1.0, t_arr, 1.0)
    r = np.where(t_arr >= 1.0, 1.0 - 1.0 / (2.0 * safe), np.exp(low - 1.0) / 2.0)
    return _out(r, t)


def window_index(t):
    """Integer ``k >= 2`` with ``2k^2 - 3k + 2 <= t <= 2k^2 + k + 1`` (for ``t >= 4``).

    Windows tile ``[4, inf)``; at a shared endpoint the smaller ``k`` is
    returned. Entries with ``t < 4`` get 0.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    guess = np.rint(np.sqrt(np.maximum(t_arr, 0.0) / 2.0)).astype(np.int64)
    k = np.zeros_like(guess)
    found = np.zeros(t_arr.shape, dtype=bool)
    for off in range(-2, 3):
        cand = np.maximum(guess + off, 2)
        lo = 2 * cand**2 - 3 * cand + 2
        hi = 2 * cand**2 + cand + 1
        hit = (~found) & (t_arr >= 4.0) & (lo <= t_arr) & (t_arr <= hi)
        k[hit] = cand[hit]
        found |= hit
    if np.any((t_arr >= 4.0) & ~found):
        raise AssertionError("window search failed")
    return int(k[0]) if np.ndim(t) == 0 else k


def angle_over_pi(t):
    """``omega(t) / pi`` with branches resolved in their printed order.

    The three ``k``-branches overlap; the first matching one wins, which makes
    ``omega`` continuous.
    """
    t_arr = np.asarray(t, dtype=float)
    k = np.asarray(window_index(t_arr), dtype=float)
    k2 = 2.0 * k * k
    kk = np.where(k > 0, k, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        b1 = -2.0 * k - 1.0 / (k2 + 2.0 - t_arr)
        b2 = -(2.0 * k + 2.0) + 1.0 / (t_arr - k2)
        b3 = -2.0 * k + (k2 - 2.0 * k + 2.0 - t_arr) / (kk * kk)
        b4 = -4.0 + 1.0 / (t_arr - 2.0)
    b5 = -t_arr
    big = t_arr >= 4.0
    conds = [
        big & (k2 - k + 2.0 <= t_arr) & (t_arr <= k2 + 1.0),
        big & (k2 <= t_arr) & (t_arr <= k2 + k + 1.0),
        big & (k2 - 3.0 * k + 2.0 <= t_arr) & (t_arr <= k2 - k + 2.0),
        (3.0 <= t_arr) & (t_arr <= 4.0),
        t_arr <= 3.0,
    ]
    out = np.select(conds, [b1, b2, b3, b4, b5], default=np.nan)
    return _out(out, t)


def branch_index(t):
    """Which of the five printed branches (1-based) defines ``omega(t)``."""
    t_arr = np.asarray(t, dtype=float)
    k = np.asarray(window_index(t_arr), dtype=float)
    k2 = 2.0 * k * k
    big = t_arr >= 4.0
    conds = [
        big & (k2 - k + 2.0 <= t_arr) & (t_arr <= k2 + 1.0),
        big & (k2 <= t_arr) & (t_arr <= k2 + k + 1.0),
        big & (k2 - 3.0 * k + 2.0 <= t_arr) & (t_arr <= k2 - k + 2.0),
        (3.0 <= t_arr) & (t_arr <= 4.0),
        t_arr <= 3.0,
    ]
    out = np.select(conds, [1, 2, 3, 4, 5], default=0)
    return int(out) if np.ndim(t) == 0 else out


def angle(t):
    """``omega(t)`` as an unreduced real lift."""
    return _out(np.pi * np.asarray(angle_over_pi(t)), t)


def cis_pi(x):
    """``exp(i pi x)``, exact at half-integer ``x``."""
    x_arr = np.asarray(x, dtype=float)
    red = np.mod(x_arr, 2.0)
    val = np.cos(np.pi * red) + 1j * np.sin(np.pi * red)
    exact = {0.0: 1.0 + 0j, 0.5: 1j, 1.0: -1.0 + 0j, 1.5: -1j}
    for key, z in exact.items():
        val = np.where(red == key, z, val)
    return complex(val) if np.ndim(x) == 0 else val


def gamma_point(t):
    """``r(t) exp(i omega(t))``."""
    z = np.asarray(radius(t)) * np.asarray(cis_pi(angle_over_pi(t)))
    return complex(z) if np.ndim(t) == 0 else z


def circle_embed_param(s):
    """Point ``phi_s(-1)`` of the homoclinic orbit on the circle."""
    s_arr = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        turns = np.where(s_arr >= 0.0, 1.0 / (s_arr + 1.0), 1.0 / (s_arr - 1.0))
    z = cis_pi(turns)
    return complex(z) if np.ndim(s) == 0 else z


@dataclass(frozen=True)
class FixedPoint:
    """The fixed point ``1`` of the flow."""

    def advanced(self, t: float) -> "FixedPoint":
        return self


@dataclass(frozen=True)
class CirclePoint:
    """``phi_s(-1)``: homoclinic time ``s`` on the circle."""

    s: float

    def advanced(self, t: float) -> "CirclePoint":
        return CirclePoint(self.s + t)


@dataclass(frozen=True)
class CurvePoint:
    """``gamma(s)``: curve time ``s``."""

    s: float

    def advanced(self, t: float) -> "CurvePoint":
        return CurvePoint(self.s + t)


FlowPoint = Union[FixedPoint, CirclePoint, CurvePoint]


def flow(x: FlowPoint, t: float) -> FlowPoint:
    return x.advanced(t)


def circle_embed(x) -> complex:
    """Complex coordinate of a circle point (or of the fixed point)."""
    if isinstance(x, FixedPoint):
        return 1.0 + 0j
    if isinstance(x, CirclePoint):
        return circle_embed_param(x.s)
    return circle_embed_param(x)


def embed(x: FlowPoint) -> complex:
    if isinstance(x, CurvePoint):
        return gamma_point(x.s)
    return circle_embed(x)


def embed_orbit(x: FlowPoint, times) -> np.ndarray:
    """``embed(flow(x, t))`` for an array of times."""
    times = np.asarray(times, dtype=float)
    if isinstance(x, FixedPoint):
        return np.ones(times.shape, dtype=complex)
    if isinstance(x, CirclePoint):
        return circle_embed_param(x.s + times)
    return gamma_point(x.s + times)


@dataclass(frozen=True)
class Observable:
    """Continuous function on ``S`` vanishing at the fixed point 1."""

    name: str
    func: Callable

    def __call__(self, z):
        return self.func(z)


f1 = Observable("f1", lambda z: np.abs(np.asarray(z) - 1.0) / 2.0)
f2 = Observable("f2", lambda z: (1.0 - np.real(np.asarray(z))) / 2.0)
OBSERVABLES = {"f1": f1, "f2": f2}


def koopman_eval(f: Observable, x: FlowPoint, t: float):
    """``(T(t) f)(x) = f(phi_t(x))``."""
    return f(embed(flow(x, t)))


@dataclass(eq=False)
class CounterexampleSeries:
    n: np.ndarray
    t: np.ndarray
    gamma: np.ndarray
    deviation: np.ndarray
    values: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "t", "re_gamma", "im_gamma", "deviation", "f"])
            for i in range(self.n.size):
                w.writerow([int(self.n[i]), int(self.t[i]), fmt(self.gamma[i].real),
                            fmt(self.gamma[i].imag), fmt(self.deviation[i]), fmt(self.values[i])])


def counterexample_series(f: Observable, n_max: int) -> CounterexampleSeries:
    """``f(gamma(p(n)))`` and ``|gamma(p(n)) + 1|`` for ``n = 2..n_max``."""
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    # p increases on n >= 1, so the last time is the largest
    if COUNTER_POLY.value(n_max) > 2**53:
        raise OverflowError("curve times beyond 2**53 are not exactly representable")
    ts = np.array(poly_values(COUNTER_POLY, n_max, start=2), dtype=np.int64)
    z = gamma_point(ts.astype(float))
    return CounterexampleSeries(np.arange(2, n_max + 1), ts, z, np.abs(z + 1.0),
                                np.asarray(f(z), dtype=float))


@dataclass(eq=False)
class AwsSeries:
    y: np.ndarray
    cesaro: np.ndarray
    selection: SubsequenceSelection

    def write_csv(self, path) -> None:
        mask = self.selection.mask()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "y", "cesaro", "selected"])
            for i in range(self.y.size):
                w.writerow([i + 1, fmt(self.y[i]), fmt(self.cesaro[i]), int(mask[i])])


def aws_series(f: Observable, x: FlowPoint, n_max: int) -> AwsSeries:
    """``y_n = |f(phi_n(x))|`` for ``n = 1..n_max``, Cesaro means and extraction.

    This is the orbit of the Koopman operator of the time-1 map tested
    against the Dirac functional at ``x``.
    """
    if abs(complex(f(1.0 + 0j))) != 0.0:
        raise ValueError("observable must vanish at the fixed point")
    y = np.abs(np.asarray(f(embed_orbit(x, np.arange(1, n_max + 1))), dtype=complex)).astype(float)
    return AwsSeries(y, cesaro(y), kvn_extract(y))


def seam_points(k_max: int = 60) -> list[float]:
    pts = [1.0, 3.0, 4.0]
    for k in range(2, k_max + 1):
        pts += [2.0 * k * k - k + 2.0, 2.0 * k * k + 1.0, 2.0 * k * k + k + 1.0]
    return pts


def seam_jumps(k_max: int = 60, delta: float = 1e-6) -> np.ndarray:
    """``|gamma(t + delta) - gamma(t - delta)| / delta`` at every seam."""
    pts = np.array(seam_points(k_max))
    return np.abs(gamma_point(pts + delta) - gamma_point(pts - delta)) / delta
