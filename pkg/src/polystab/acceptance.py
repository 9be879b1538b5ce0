"""Acceptance suite: ten desk-scale checks, each with its tolerance and time limit.

Every check returns a :class:`CriterionResult`; :func:`run_all` is what the
``selftest`` subcommand and ``tests/test_acceptance.py`` execute.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import diskflow, ergodic, numkit, splitting
from .batteries import (block_conjugate, foguel_case, random_contraction, random_matrix,
                        unimodular_diagonal)
from .operators import BilateralShift, DiagonalUnitary, SupportVector, orbit_inner
from .orbitlab import cesaro, kvn_converse_check, kvn_extract, orbit_vectors, vdc_stats
from .polyseq import IntPolynomial, difference_poly, values as poly_values


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    limit: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_short(v)}" for k, v in self.detail.items())
        return f"[{status}] criterion {self.number:2d} {self.name} ({self.seconds:.2f}s / {self.limit:g}s): {info}"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "seconds": self.seconds, "limit": self.limit, "detail": self.detail}


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return v


def _timed(number: int, name: str, limit: float, body) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = body()
    dt = time.perf_counter() - t0
    return CriterionResult(number, name, bool(ok and dt < limit), dt, limit, detail)


def counterexample_exactness() -> CriterionResult:
    def body():
        ser = diskflow.counterexample_series(diskflow.f1, 1000)
        expect = 1.0 / (2.0 * ser.t.astype(float))
        # gamma(p(n)) = -(1 - 1/(2 p(n)))
        err = float(np.abs(ser.gamma + (1.0 - expect)).max())
        return err <= 1e-12, {"max_error": err, "last_f1": float(ser.values[-1])}
    return _timed(1, "counterexample exactness", 1.0, body)


def curve_aws() -> CriterionResult:
    def body():
        s = diskflow.aws_series(diskflow.f1, diskflow.CurvePoint(0.0), 10**5)
        c3, c5 = float(s.cesaro[999]), float(s.cesaro[-1])
        dens = s.selection.density()
        ok = c5 <= 0.5 * c3 and c5 <= 0.15 and dens >= 0.95
        return ok, {"C(1e3)": c3, "C(1e5)": c5, "density": dens}
    return _timed(2, "almost weak stability on the curve", 5.0, body)


def seam_continuity() -> CriterionResult:
    def body():
        pts = np.array(diskflow.seam_points(60))
        delta = 1e-6
        lo = diskflow.angle_over_pi(pts - delta)
        hi = diskflow.angle_over_pi(pts + delta)
        omega_ratio = float(np.abs(np.pi * (hi - lo)).max() / delta)
        gamma_ratio = float(diskflow.seam_jumps(60, delta).max())
        ok = omega_ratio <= 20.0 and gamma_ratio <= 20.0
        return ok, {"seams": int(pts.size), "omega_jump_over_delta": omega_ratio,
                    "gamma_jump_over_delta": gamma_ratio}
    return _timed(3, "seam continuity", 1.0, body)


def foguel_recovery(seed: int = 4) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        dims_ok, worst = 0, 0.0
        for _ in range(50):
            du, dk = int(rng.integers(1, 4)), int(rng.integers(1, 6))
            t, hu_true = foguel_case(rng, du, dk, float(rng.uniform(0.05, 0.8)))
            res = splitting.foguel_split(t)
            hu = res.basis("H_u")
            if hu.shape[1] == du:
                dims_ok += 1
                worst = max(worst, numkit.subspace_angle(hu_true, hu))
        return dims_ok == 50 and worst <= 1e-8, {"dims_exact": f"{dims_ok}/50", "max_angle": worst}
    return _timed(4, "Foguel split recovery", 10.0, body)


def jdlg_recovery(seed: int = 5) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        dims_ok, worst = 0, 0.0
        for i in range(50):
            dr, ds = int(rng.integers(1, 4)), int(rng.integers(1, 6))
            strict = random_contraction(ds, rng, float(rng.uniform(0.1, 0.9)))
            t, _ = block_conjugate([unimodular_diagonal(dr, rng), strict], rng)
            res = splitting.jdlg_split(t, horizon=2000, samples=5, seed=seed + i)
            dims_ok += res.dims["H_r"] == dr
            worst = max(worst, max(res.evidence["cesaro"]))
        return dims_ok == 50 and worst <= 0.05, {"dims_exact": f"{dims_ok}/50", "max_cesaro": worst}
    return _timed(5, "reversible/stable split", 10.0, body)


def kvn_squares(seed: int = 6) -> CriterionResult:
    def body():
        n = 10**6
        y = np.zeros(n)
        y[np.arange(1, 1001) ** 2 - 1] = 1.0
        sel = kvn_extract(y)
        excluded = np.setdiff1d(np.arange(1, n + 1), sel.indices)
        exact = np.array_equal(excluded, np.arange(1, 1001) ** 2)
        dens = sel.density()
        mx = float(y[sel.indices - 1].max())
        rng = np.random.default_rng(seed)
        conv = 0
        for _ in range(100):
            m = int(rng.integers(10, 5000))
            bound = float(rng.uniform(0.5, 3.0))
            ys = bound * rng.random(m) ** float(rng.uniform(0.5, 8.0))
            if rng.random() < 0.5:
                ys *= (np.arange(1, m + 1) <= m // 3)
            conv += kvn_converse_check(ys, kvn_extract(ys), bound).holds
        ok = exact and dens >= 0.998 and mx == 0.0 and conv == 100
        return ok, {"excluded_squares": int(excluded.size), "density": dens,
                    "max_selected": mx, "converse_holds": f"{conv}/100"}
    return _timed(6, "Koopman-von Neumann extractor", 10.0, body)


def shift_desk_checks(seed: int = 7) -> CriterionResult:
    def body():
        op = BilateralShift()
        e0 = SupportVector.basis(0)
        p = IntPolynomial((0, 0, 1))
        exps = poly_values(p, 10**4)
        y = np.abs(np.array(orbit_inner(op, e0, e0, exps)))
        ces = float(cesaro(y)[-1])
        st = vdc_stats(orbit_vectors(op, e0, exps), 50)
        gt = float(np.max(st.gamma_tilde))
        rng = np.random.default_rng(seed)
        good = 0
        for _ in range(200):
            deg = int(rng.integers(1, 5))
            coeffs = [int(c) for c in rng.integers(-20, 21, size=deg + 1)]
            coeffs[-1] = int(rng.integers(1, 21))
            q = IntPolynomial(tuple(coeffs))
            n0, n = int(rng.integers(0, 50)), int(rng.integers(1, 50))
            dq = difference_poly(q, n0, n)
            ok = dq.degree == q.degree - 1 and all(
                dq.value(j) == q.value(n0 + j + n) - q.value(n0 + j) for j in range(1, 101))
            good += ok
        return ces == 0.0 and gt == 0.0 and good == 200, {
            "cesaro": ces, "max_gamma_tilde": gt, "difference_poly_ok": f"{good}/200"}
    return _timed(7, "shift desk checks", 5.0, body)


def ergodic_identity(seed: int = 8) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(100):
            sys, mats, req, n = ergodic.random_case(rng)
            worst = max(worst, ergodic.equivalence_check(sys, mats, req, n, cauchy=False).max_discrepancy)
        return worst <= 1e-12, {"max_discrepancy": worst}
    return _timed(8, "multiple/entangled identity", 30.0, body)


ROUNDING_FLOOR = 1e-13


def weyl_convergence() -> CriterionResult:
    def body():
        u = DiagonalUnitary((Fraction(0), Fraction(1, 3), Fraction(2, 3)))
        req = ergodic.AverageRequest((1, 1), (IntPolynomial((0, 0, 1)),))
        a = np.ones((3, 3))
        oracle = ergodic.weyl_oracle(u.angles, [a, a], req)

        def err(n):
            return float(np.linalg.norm(ergodic.entangled_average(u, [a, a], req, n) - oracle, 2))

        e300, e3000 = err(300), err(3000)
        # at multiples of the period the finite average equals the limit, so
        # both errors are rounding; the rate shows off the period grid
        decrease = e3000 <= e300 / 5 or max(e300, e3000) <= ROUNDING_FLOOR
        e301, e3001 = err(301), err(3001)
        rate = e3001 <= e301 / 5
        zeta = np.exp(2j * np.pi / 3)
        one_dim = abs(ergodic.weyl_phase_mean(Fraction(1, 3), IntPolynomial((0, 0, 1))) - (1 + 2 * zeta) / 3)
        ok = decrease and rate and e3000 <= 1e-2 and one_dim <= 1e-14
        return ok, {"err300": e300, "err3000": e3000, "err301": e301, "err3001": e3001,
                    "one_dim_error": float(one_dim)}
    return _timed(9, "Weyl oracle convergence", 30.0, body)


def substrate(seed: int = 10) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        worst_eig = 0.0
        for i in range(200):
            d = int(rng.integers(1, 17))
            m = random_matrix(d, rng) if i % 2 else random_contraction(d, rng, 1.0)
            nrm = max(np.linalg.norm(m, 2), 1e-300)
            for lam, v in numkit.eigen(m):
                worst_eig = max(worst_eig, float(np.linalg.norm(m @ v - lam * v)) / nrm)
        worst_pow, worst_adj = 0.0, 0.0
        for _ in range(50):
            d = int(rng.integers(1, 9))
            m = random_contraction(d, rng, 1.0)
            n = int(rng.integers(0, 40))
            seq = np.eye(d, dtype=complex)
            for _ in range(n):
                seq = seq @ m
            worst_pow = max(worst_pow, float(np.abs(numkit.mat_power(m, n) - seq).max()))
            x, y = random_matrix(1, rng, d)[:, 0], random_matrix(1, rng, d)[:, 0]
            worst_adj = max(worst_adj, abs(numkit.inner(m @ x, y) - numkit.inner(x, numkit.adjoint(m) @ y)))
        ok = worst_eig <= 1e-8 and worst_pow <= 1e-10 and worst_adj <= 1e-10
        return ok, {"eigen_residual": worst_eig, "power_error": worst_pow, "adjoint_error": worst_adj}
    return _timed(10, "linear-algebra substrate", 20.0, body)


CRITERIA = [
    counterexample_exactness,
    curve_aws,
    seam_continuity,
    foguel_recovery,
    jdlg_recovery,
    kvn_squares,
    shift_desk_checks,
    ergodic_identity,
    weyl_convergence,
    substrate,
]


def run_all(verbose: bool = False) -> list[CriterionResult]:
    out = []
    for crit in CRITERIA:
        res = crit()
        if verbose:
            print(res.line(), flush=True)
        out.append(res)
    return out
