"""Finite-horizon asymptotics of scalar and vector sequences.

Sequences are indexed from 1. Limits are replaced by values at the horizon,
with partial horizons reported alongside so that trends can be inspected.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import operators as ops
from .errors import NormalizationError
from .polyseq import IntPolynomial, in_class_P, values as poly_values

NORM_SLACK = 1e-12
DEFAULT_MAX_LEVEL = 60


def cesaro(s) -> np.ndarray:
    """Running means ``m_n = (1/n) sum_{k<=n} s_k``."""
    s = np.asarray(s)
    if s.ndim != 1:
        raise ValueError("cesaro expects a 1-d series")
    if not np.all(np.isfinite(s)):
        raise ValueError("series has non-finite values")
    return np.cumsum(s) / np.arange(1, s.shape[0] + 1)


@dataclass(frozen=True, eq=False)
class SubsequenceSelection:
    """Strictly increasing indices in ``1..horizon``.

    ``levels`` holds, for every selected index, the threshold level ``m`` of
    the extractor block it came from (``y_n < 2**-m``); it is empty for
    selections that were not produced by the extractor.
    """

    indices: np.ndarray
    horizon: int
    levels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.size and (idx[0] < 1 or idx[-1] > self.horizon or np.any(np.diff(idx) <= 0)):
            raise ValueError("indices must be strictly increasing within 1..horizon")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "levels", np.asarray(self.levels, dtype=int))

    @classmethod
    def from_mask(cls, mask, levels=None) -> "SubsequenceSelection":
        mask = np.asarray(mask, dtype=bool)
        idx = np.flatnonzero(mask) + 1
        lv = np.zeros(0, dtype=int) if levels is None else np.asarray(levels)[mask]
        return cls(idx, mask.shape[0], lv)

    def __len__(self) -> int:
        return int(self.indices.size)

    def mask(self) -> np.ndarray:
        out = np.zeros(self.horizon, dtype=bool)
        out[self.indices - 1] = True
        return out

    def density_profile(self) -> np.ndarray:
        """``|{k : n_k <= n}| / n`` for ``n = 1..horizon``."""
        return np.cumsum(self.mask()) / np.arange(1, self.horizon + 1)

    def density(self, n: int | None = None) -> float:
        return empirical_density(self, self.horizon if n is None else n)


def empirical_density(sel: SubsequenceSelection, n: int) -> float:
    if not 1 <= n <= sel.horizon:
        raise ValueError(f"n must lie in 1..{sel.horizon}")
    return int(np.searchsorted(sel.indices, n, side="right")) / n


def _first_stable_start(good: np.ndarray, start: int, threshold: float) -> int | None:
    """Least ``b >= start`` (0-based) such that the running density of ``good``
    stays at least ``threshold`` on ``[b, N)``, or ``None``."""
    n = good.shape[0]
    running = np.cumsum(good) / np.arange(1, n + 1)
    ok = running >= threshold
    if not ok[-1]:
        return None
    # last failing position; everything after it is fine
    failing = np.flatnonzero(~ok[start:])
    if failing.size == 0:
        return start
    return start + int(failing[-1]) + 1


def kvn_extract(y, max_level: int = DEFAULT_MAX_LEVEL) -> SubsequenceSelection:
    """Constructive finite-horizon density-1 extraction for a nonnegative series.

    The horizon is cut into consecutive blocks; block ``m`` keeps the indices
    with ``y_n < 2**-m``. Block ``m`` ends at the earliest point from which
    the candidates ``{y_n < 2**-(m+1)}`` keep running density at least
    ``1 - 2**-(m+1)`` all the way to the horizon. When no such point exists the
    current block runs to the horizon.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("kvn_extract expects a non-empty 1-d series")
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise ValueError("kvn_extract expects finite nonnegative values")
    n = y.shape[0]
    level_of = np.empty(n, dtype=int)
    start, m = 0, 1
    while True:
        if m >= max_level:
            level_of[start:] = m
            break
        nxt = _first_stable_start(y < 2.0 ** -(m + 1), start, 1.0 - 2.0 ** -(m + 1))
        if nxt is None:
            level_of[start:] = m
            break
        level_of[start:nxt] = m
        start, m = nxt, m + 1
    selected = y < np.exp2(-level_of.astype(float))
    return SubsequenceSelection.from_mask(selected, level_of)


def joint_kvn(ys: Sequence, max_level: int = DEFAULT_MAX_LEVEL) -> SubsequenceSelection:
    """One selection along which every series in ``ys`` is small (pointwise max)."""
    arrs = [np.asarray(y, dtype=float) for y in ys]
    if not arrs:
        raise ValueError("joint_kvn needs at least one series")
    if len({a.shape for a in arrs}) != 1:
        raise ValueError("series must share the horizon")
    return kvn_extract(np.max(np.vstack(arrs), axis=0), max_level)


@dataclass(frozen=True)
class ConverseCheck:
    cesaro: float
    bound: float
    density: float
    max_selected: float

    @property
    def holds(self) -> bool:
        return self.cesaro <= self.bound + 1e-12


def kvn_converse_check(y, sel: SubsequenceSelection, bound: float) -> ConverseCheck:
    """Cesaro mean at the horizon against ``(1 - density) * bound + max_selected y``."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != sel.horizon:
        raise ValueError("selection horizon does not match the series")
    if np.any(y > bound) or np.any(y < 0):
        raise ValueError("series must take values in [0, bound]")
    dens = sel.density()
    mx = float(y[sel.indices - 1].max()) if len(sel) else 0.0
    return ConverseCheck(float(cesaro(y)[-1]), (1.0 - dens) * bound + mx, dens, mx)


@dataclass(frozen=True, eq=False)
class VdcStats:
    """Correlation statistics ``gamma_j`` and ``gamma_tilde_j``, ``j = 1..lag_max``.

    ``gamma[j-1] = |(1/N) sum_{n<=N-j} <h_n, h_{n+j}>|`` and ``gamma_tilde``
    the same with the modulus inside the sum. ``partial`` maps the horizons
    ``N/4`` and ``N/2`` to their own ``(gamma, gamma_tilde)`` pairs.
    """

    gamma: np.ndarray
    gamma_tilde: np.ndarray
    horizon: int
    lag_max: int
    sup_norm_sq: float
    partial: dict = field(default_factory=dict)


def _as_rows(h):
    """Stack a sequence of vectors as rows of a dense or sparse matrix."""
    if isinstance(h, np.ndarray):
        if h.ndim != 2:
            raise ValueError("dense sequences are (N, d) arrays")
        return h.astype(complex), np.sum(np.abs(h) ** 2, axis=1)
    h = list(h)
    if h and isinstance(h[0], ops.SupportVector):
        cols: dict[int, int] = {}
        data, ri, ci = [], [], []
        for r, v in enumerate(h):
            for k, c in v.items():
                data.append(c)
                ri.append(r)
                ci.append(cols.setdefault(k, len(cols)))
        mat = sp.csr_matrix((np.array(data, dtype=complex), (ri, ci)), shape=(len(h), max(len(cols), 1)))
        norms = np.array([v.norm_squared() for v in h])
        return mat, norms
    arr = np.array([np.asarray(v, dtype=complex) for v in h])
    return arr, np.sum(np.abs(arr) ** 2, axis=1)


def _lag_products(rows, j: int, upto: int) -> np.ndarray:
    """``<h_n, h_{n+j}>`` for ``n = 1..upto-j``."""
    a, b = rows[: upto - j], rows[j:upto]
    if sp.issparse(rows):
        return np.asarray(a.conj().multiply(b).sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", np.conj(a), b)


def _gammas(rows, horizon: int, lag_max: int) -> tuple[np.ndarray, np.ndarray]:
    g = np.zeros(lag_max)
    gt = np.zeros(lag_max)
    for j in range(1, lag_max + 1):
        if j >= horizon:
            continue
        prods = _lag_products(rows, j, horizon)
        g[j - 1] = abs(prods.sum()) / horizon
        gt[j - 1] = np.abs(prods).sum() / horizon
    return g, gt


def vdc_stats(h, lag_max: int) -> VdcStats:
    """Finite-horizon van der Corput statistics of ``h_1..h_N`` (``||h_n|| <= 1``).

    ``h`` is an ``(N, d)`` array, a list of dense vectors, or a list of
    :class:`~polystab.operators.SupportVector` (see :func:`orbit_vectors`).
    """
    rows, norms_sq = _as_rows(h)
    n = rows.shape[0]
    if n == 0:
        raise ValueError("empty sequence")
    if np.any(norms_sq > 1.0 + NORM_SLACK):
        worst = int(np.argmax(norms_sq)) + 1
        raise NormalizationError(f"||h_{worst}|| = {math.sqrt(norms_sq[worst - 1]):.6g} exceeds 1")
    if sp.issparse(rows):
        rows = rows.tocsr()
    g, gt = _gammas(rows, n, lag_max)
    partial = {}
    for div in (4, 2):
        sub = n // div
        if sub >= 1:
            partial[sub] = _gammas(rows, sub, lag_max)
    return VdcStats(g, gt, n, lag_max, float(norms_sq.max()), partial)


def orbit_vectors(op: ops.Operator, h0, exponents) -> list:
    """``[T^{e} h0 for e in exponents]`` for ascending exponents."""
    exps = [ops.check_exponent(e) for e in exponents]
    if any(b < a for a, b in zip(exps, exps[1:])):
        raise ValueError("exponents must be sorted ascending")
    out, cur, pos = [], h0, 0
    for e in exps:
        if e != pos:
            cur = op.power_apply(e - pos, cur)
            pos = e
        out.append(cur)
    return out


def vdc_mean_bound(stats: VdcStats, g_norm: float = 1.0) -> float:
    """Upper bound for ``(1/N) sum_n |<g, h_n>|`` from the van der Corput inequality.

    With ``H = lag_max + 1`` and ``S = sup ||h_n||^2``::

        ||(1/N) sum c_n h_n||^2 <= (N+H-1)/(H N) * S
                                   + 2 (N+H-1)/(H^2) * sum_{j<H} (H-j) gamma_tilde_j / N

    for any unimodular ``c_n``; choosing ``c_n`` to align the phases of
    ``<g, h_n>`` bounds the Cesaro mean of ``|<g, h_n>|`` by ``||g||`` times
    the square root of the right-hand side.
    """
    n, big_h = stats.horizon, min(stats.lag_max + 1, stats.horizon)
    lags = np.arange(1, big_h)
    weighted = float(np.sum((big_h - lags) * stats.gamma_tilde[: big_h - 1]))
    rhs = (n + big_h - 1) / (big_h * n) * stats.sup_norm_sq
    rhs += 2.0 * (n + big_h - 1) / (big_h**2 * n) * weighted
    return g_norm * math.sqrt(max(rhs, 0.0))


@dataclass(eq=False)
class FunctionalReport:
    series: np.ndarray
    cesaro: np.ndarray
    selection: SubsequenceSelection

    def cesaro_at(self, n: int) -> float:
        return float(self.cesaro[n - 1])


@dataclass(eq=False)
class AwsReport:
    """Result of :func:`aws_verdict`."""

    polynomial: IntPolynomial
    horizon: int
    tau: float
    functionals: list[FunctionalReport]
    joint: SubsequenceSelection
    verdict: bool

    def summary(self) -> dict:
        n = self.horizon
        marks = sorted({max(n // 4, 1), max(n // 2, 1), n})
        return {
            "schema": "polystab.orbit/1",
            "polynomial": list(self.polynomial.coeffs),
            "horizon": n,
            "tau": self.tau,
            "verdict": self.verdict,
            "joint_density": self.joint.density(),
            "functionals": [
                {
                    "cesaro": {str(m): f.cesaro_at(m) for m in marks},
                    "kvn_density": f.selection.density(),
                }
                for f in self.functionals
            ],
            "note": "finite-horizon evidence, not a proof of almost weak stability",
        }

    def write_csv(self, path, index: int = 0) -> None:
        f = self.functionals[index]
        write_series_csv(path, f.series, f.cesaro, f.selection)


def write_series_csv(path, y, ces, sel: SubsequenceSelection) -> None:
    mask = sel.mask()
    dens = sel.density_profile()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "y", "cesaro", "selected", "density"])
        for i in range(len(y)):
            w.writerow([i + 1, fmt(y[i]), fmt(ces[i]), int(mask[i]), fmt(dens[i])])


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def default_tau(n: int) -> float:
    return 10.0 / math.sqrt(n)


def aws_verdict(op: ops.Operator, h, test_functionals, p: IntPolynomial, horizon: int,
                tau: float | None = None) -> AwsReport:
    """Finite-horizon almost weak stability evidence along ``T^{p(n)} h``.

    For each functional ``g`` the series ``y_n = |<g, T^{p(n)} h>|`` is built
    for ``n = 1..horizon``; the verdict is true when every Cesaro mean at the
    horizon is at most ``tau`` (default ``10 / sqrt(horizon)``, a heuristic).
    """
    if not op.is_contraction():
        raise ValueError("aws_verdict needs a contraction")
    if p.degree < 1 or not in_class_P(p):
        raise ValueError("need a non-constant polynomial of class P")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    tau = default_tau(horizon) if tau is None else tau
    exps = np.array(poly_values(p, horizon), dtype=np.int64)
    uniq, inverse = np.unique(exps, return_inverse=True)
    # one orbit walk shared by all functionals
    orbit = orbit_vectors(op, h, [int(u) for u in uniq])
    reports = []
    for g in test_functionals:
        vals = np.array([abs(ops.vector_inner(g, v)) for v in orbit])
        y = vals[inverse]
        ces = cesaro(y)
        reports.append(FunctionalReport(y, ces, kvn_extract(y)))
    joint = joint_kvn([r.series for r in reports])
    verdict = all(r.cesaro[-1] <= tau for r in reports)
    return AwsReport(p, horizon, tau, reports, joint, verdict)


def summary_json(report: AwsReport) -> str:
    return json.dumps(report.summary(), sort_keys=True)
