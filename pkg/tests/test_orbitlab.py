import csv
import math
from fractions import Fraction

import numpy as np
import pytest

from polystab import orbitlab as ol
from polystab.batteries import random_contraction, random_matrix
from polystab.errors import NormalizationError
from polystab.operators import BilateralShift, Dense, DiagonalUnitary, SupportVector
from polystab.polyseq import IntPolynomial, values

N6 = 10**6


def squares(n):
    idx = np.arange(1, n + 1)
    return (np.rint(np.sqrt(idx)) ** 2 == idx).astype(float)


def cubes(n):
    idx = np.arange(1, n + 1)
    return (np.rint(np.cbrt(idx)) ** 3 == idx).astype(float)


def test_cesaro_examples():
    assert np.array_equal(ol.cesaro(np.ones(50)), np.ones(50))
    alt = np.tile([1.0, 0.0], 50)
    assert np.all(ol.cesaro(alt)[1::2] == 0.5)
    assert ol.cesaro(squares(10**4))[-1] == 0.01


def test_empirical_density_examples():
    n = 100
    assert ol.SubsequenceSelection(np.arange(1, n + 1), n).density() == 1.0
    assert ol.empirical_density(ol.SubsequenceSelection(np.arange(2, n + 1, 2), n), 100) == 0.5
    a, b, big = 7, 3, 10**5
    sel = ol.SubsequenceSelection(np.arange(a + b, big + 1, a), big)
    assert abs(sel.density() - 1 / a) <= 2 / big


def test_selection_profile_recount():
    sel = ol.SubsequenceSelection([2, 3, 7], 10)
    prof = sel.density_profile()
    for n in range(1, 11):
        assert prof[n - 1] == sum(1 for i in (2, 3, 7) if i <= n) / n
    with pytest.raises(ValueError):
        ol.SubsequenceSelection([3, 2], 10)


def test_kvn_examples():
    z = ol.kvn_extract(np.zeros(1000))
    assert len(z) == 1000 and z.density() == 1.0
    assert len(ol.kvn_extract(np.ones(1000))) == 0
    sel = ol.kvn_extract(squares(N6))
    excluded = np.setdiff1d(np.arange(1, N6 + 1), sel.indices)
    assert np.array_equal(excluded, np.arange(1, 1001) ** 2)
    assert sel.density() == 0.999


def random_series(rng, n):
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return rng.random(n) ** float(rng.uniform(1, 10))
    if kind == 1:
        return 1.0 / np.sqrt(np.arange(1, n + 1)) * rng.random(n)
    if kind == 2:
        y = np.zeros(n)
        y[rng.choice(n, size=max(1, n // 50), replace=False)] = 1.0
        return y
    return np.minimum(1.0, 5.0 / np.arange(1, n + 1))


def test_kvn_guarantees_and_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(10, 10**4 + 1))
        y = random_series(rng, n)
        sel = ol.kvn_extract(y)
        lv = sel.levels
        assert np.all(np.diff(lv) >= 0)
        assert np.all(y[sel.indices - 1] < np.exp2(-lv.astype(float)))
        c = ol.cesaro(y)[-1]
        assert 1 - sel.density() <= 4 * max(c, n ** -0.25)


def test_converse_examples():
    chk = ol.kvn_converse_check(np.zeros(10), ol.SubsequenceSelection(np.arange(1, 11), 10), 1.0)
    assert chk.bound == 0 and chk.holds
    n = 1000
    odds = (np.arange(1, n + 1) % 2 == 1).astype(float)
    chk = ol.kvn_converse_check(odds, ol.SubsequenceSelection(np.arange(2, n + 1, 2), n), 1.0)
    assert chk.cesaro == 0.5 and chk.bound == 0.5 and chk.holds
    y = squares(N6)
    chk = ol.kvn_converse_check(y, ol.kvn_extract(y), 1.0)
    assert chk.cesaro == 0.001 and chk.holds


def test_converse_random_battery():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(10, 3000))
        bound = float(rng.uniform(0.2, 4))
        y = bound * random_series(rng, n)
        assert ol.kvn_converse_check(y, ol.kvn_extract(y), bound).holds
    with pytest.raises(ValueError):
        ol.kvn_converse_check(np.array([2.0]), ol.SubsequenceSelection([1], 1), 1.0)


def test_joint_kvn_examples():
    z = ol.joint_kvn([np.zeros(100), np.zeros(100)])
    assert len(z) == 100
    assert len(ol.joint_kvn([np.zeros(100), np.ones(100)])) == 0
    sel = ol.joint_kvn([squares(N6), cubes(N6)])
    # inclusion-exclusion: 1000 squares + 100 cubes - 10 sixth powers
    assert N6 - len(sel) == 1090
    assert sel.density() >= 0.9989


def test_joint_kvn_below_threshold():
    rng = np.random.default_rng(2)
    ys = [random_series(rng, 5000) for _ in range(3)]
    sel = ol.joint_kvn(ys)
    mx = np.max(np.vstack(ys), axis=0)
    assert np.all(mx[sel.indices - 1] < np.exp2(-sel.levels.astype(float)))


def test_vdc_examples():
    lam = np.exp(2j * np.pi * 0.123)
    h0 = np.array([0.6, 0.8j])
    h = np.array([lam**n * h0 for n in range(1, 401)])
    st = ol.vdc_stats(h, 10)
    n = 400
    # |<h_n, h_{n+j}>| = 1 exactly, so gamma_tilde_j = (N - j)/N
    assert np.allclose(st.gamma_tilde, [(n - j) / n for j in range(1, 11)], atol=1e-12)
    eye = np.eye(30, dtype=complex)
    st = ol.vdc_stats(eye, 5)
    assert np.all(st.gamma == 0) and np.all(st.gamma_tilde == 0)
    orb = ol.orbit_vectors(BilateralShift(), SupportVector.basis(0), values(IntPolynomial((0, 0, 1)), 2000))
    assert np.all(ol.vdc_stats(orb, 50).gamma_tilde == 0)


def test_vdc_ordering_and_partials():
    rng = np.random.default_rng(3)
    m = random_contraction(4, rng, 0.97)
    h0 = random_matrix(1, rng, 4)[:, 0]
    h0 /= np.linalg.norm(h0)
    st = ol.vdc_stats(ol.orbit_vectors(Dense(m), h0, range(1, 801)), 20)
    assert np.all(st.gamma <= st.gamma_tilde + 1e-15)
    assert np.all(st.gamma_tilde <= st.sup_norm_sq + 1e-15)
    assert set(st.partial) == {200, 400}


def test_vdc_normalization_error():
    with pytest.raises(NormalizationError):
        ol.vdc_stats(np.array([[1.0, 1.0]]), 1)


def test_desk_form_is_violated_by_cyclic_orbit():
    # h_n = e_{n mod (J+1)} has gamma_tilde_j = 0 for j <= J, yet against the
    # uniform unit vector every |<g, h_n>| equals 1/sqrt(J+1)
    j_max, n = 9, 10**4
    h = np.eye(j_max + 1, dtype=complex)[np.arange(1, n + 1) % (j_max + 1)]
    g = np.ones(j_max + 1) / math.sqrt(j_max + 1)
    st = ol.vdc_stats(h, j_max)
    assert np.all(st.gamma_tilde == 0)
    mean = ol.cesaro(np.abs(h @ g))[-1]
    desk = math.sqrt(0 + 2 * j_max / n) + j_max / n
    assert mean > desk
    assert mean <= ol.vdc_mean_bound(st, 1.0) + 1e-12


def test_classical_vdc_bound_holds_on_battery():
    rng = np.random.default_rng(4)
    for _ in range(40):
        d = int(rng.integers(1, 6))
        m = random_contraction(d, rng, float(rng.uniform(0.5, 1.0)))
        h0 = random_matrix(1, rng, d)[:, 0]
        h0 /= np.linalg.norm(h0)
        g = random_matrix(1, rng, d)[:, 0]
        hs = np.array(ol.orbit_vectors(Dense(m), h0, range(1, 501)))
        st = ol.vdc_stats(hs, int(rng.integers(1, 30)))
        mean = ol.cesaro(np.abs(hs @ np.conj(g)))[-1]
        assert mean <= ol.vdc_mean_bound(st, float(np.linalg.norm(g))) + 1e-12


def test_aws_verdict_examples():
    e0 = SupportVector.basis(0)
    rep = ol.aws_verdict(BilateralShift(), e0, [e0], IntPolynomial((0, 0, 1)), 10**4)
    assert rep.verdict and rep.functionals[0].cesaro[-1] == 0.0
    one = np.array([1.0])
    rep = ol.aws_verdict(DiagonalUnitary((Fraction(1, 2),)), one, [one], IntPolynomial((0, 1)), 1000)
    assert not rep.verdict and np.all(rep.functionals[0].cesaro == 1.0)
    rep = ol.aws_verdict(Dense(np.array([[0.9]])), one, [one], IntPolynomial((0, 1)), 1000)
    assert rep.verdict
    y = rep.functionals[0].series
    assert np.allclose(y, 0.9 ** np.arange(1, 1001), rtol=1e-12, atol=0)


def test_aws_verdict_rejects_bad_input():
    one = np.array([1.0])
    with pytest.raises(ValueError):
        ol.aws_verdict(Dense(np.array([[1.5]])), one, [one], IntPolynomial((0, 1)), 10)
    with pytest.raises(ValueError):
        ol.aws_verdict(Dense(np.array([[0.5]])), one, [one], IntPolynomial((3,)), 10)


def test_aws_csv_and_summary(tmp_path):
    e0 = SupportVector.basis(0)
    rep = ol.aws_verdict(BilateralShift(), e0, [e0], IntPolynomial((0, 1)), 100)
    rep.write_csv(tmp_path / "a.csv")
    rep.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rows = list(csv.reader(open(tmp_path / "a.csv")))
    assert rows[0] == ["n", "y", "cesaro", "selected", "density"]
    assert len(rows) == 101
    summ = rep.summary()
    assert summ["schema"] == "polystab.orbit/1"
    assert set(summ["functionals"][0]["cesaro"]) == {"25", "50", "100"}


def test_fmt_round_trip():
    for x in (0.1, 1 / 3, 1e-300, 123456789.123456789):
        assert float(ol.fmt(x)) == x
