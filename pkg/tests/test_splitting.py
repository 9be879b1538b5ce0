import json
import warnings

import numpy as np
import pytest

from polystab import numkit, splitting
from polystab.batteries import (block_conjugate, contraction_battery, foguel_case,
                                nilpotent_jordan, random_contraction, unimodular_diagonal)
from polystab.operators import (BilateralShift, Dense, DiagonalUnitary, DirectSum,
                                UnilateralShift)

TOL = splitting.DEFAULT_TOL
E = np.eye(2, dtype=complex)


def same_span(a, b):
    return a.shape[1] == b.shape[1] and numkit.subspace_angle(a, b) <= 1e-10


def test_foguel_examples():
    t = np.diag([np.exp(1j * np.pi / 5), 0.5])
    res = splitting.foguel_split(t)
    assert same_span(res.basis("H_u"), E[:, :1])
    assert same_span(res.basis("H_0"), E[:, 1:])
    res = splitting.foguel_split(0.9 * nilpotent_jordan(2))
    assert res.dims == {"H_u": 0, "H_0": 2}


def test_foguel_construction_oracle():
    rng = np.random.default_rng(0)
    t, hu = foguel_case(rng, 3, 5, 0.8)
    res = splitting.foguel_split(t)
    assert res.dims["H_u"] == 3
    assert numkit.subspace_angle(hu, res.basis("H_u")) <= 1e-8


def test_foguel_rotation_block_is_cnu_part():
    # a non-normal contraction whose unitary part is a rotation block
    rng = np.random.default_rng(1)
    rot = np.array([[0, -1], [1, 0]], dtype=complex)
    t, w = block_conjugate([rot, 0.7 * nilpotent_jordan(3)], rng)
    res = splitting.foguel_split(t)
    assert numkit.subspace_angle(w[:, :2], res.basis("H_u")) <= 1e-8


def test_jdlg_examples():
    res = splitting.jdlg_split(np.diag([np.exp(2j * np.pi * 0.3), 0.5]), samples=2)
    assert same_span(res.basis("H_r"), E[:, :1])
    u = np.diag(np.exp(2j * np.pi * np.array([0.1, 0.2, 0.7, 0.9])))
    res = splitting.jdlg_split(u)
    assert res.dims == {"H_r": 4, "H_s": 0}
    rng = np.random.default_rng(2)
    t, w = block_conjugate([np.array([[1j]]), 0.7 * nilpotent_jordan(2)], rng)
    res = splitting.jdlg_split(t)
    assert res.dims["H_r"] == 1
    assert numkit.subspace_angle(w[:, :1], res.basis("H_r")) <= 1e-8
    assert max(res.evidence["cesaro"]) <= 0.05
    assert "note" in res.evidence


def test_jdlg_warns_near_threshold():
    t = np.diag([1.0, 1 - 5 * TOL])
    with pytest.warns(splitting.SplitWarning):
        res = splitting.jdlg_split(t, samples=0)
    assert res.warnings


def test_three_way_dense_battery_has_trivial_hus():
    for m in contraction_battery(40, 3):
        res = splitting.three_way_split(m)
        assert res.dims["H_us"] == 0
        assert sum(res.dims.values()) == m.shape[0]


def test_three_way_descriptive():
    res = splitting.three_way_split(BilateralShift())
    assert res.descriptive and res.dims == {"H_r": 0, "H_us": "all", "H_0": 0}
    assert splitting.three_way_split(UnilateralShift()).dims["H_0"] == "all"
    assert splitting.three_way_split(DiagonalUnitary((0.25,))).dims["H_r"] == "all"
    ds = splitting.three_way_split(DirectSum((BilateralShift(), Dense(np.array([[0.5]])))))
    assert ds.descriptive and len(ds.dims["blocks"]) == 2


def test_split_invariants_on_battery():
    for m in contraction_battery(200, 4):
        for res in (splitting.foguel_split(m), splitting.jdlg_split(m, samples=0)):
            diag = res.diagnostics(m)
            assert diag["dim_total"] == m.shape[0]
            assert diag["orthonormality"] <= 10 * TOL
            assert max(diag["invariance"].values()) <= 10 * TOL


def test_unitarity_idempotence_consistency():
    rng = np.random.default_rng(5)
    for _ in range(30):
        t, _ = foguel_case(rng, int(rng.integers(1, 4)), int(rng.integers(1, 5)), 0.8)
        fog = splitting.foguel_split(t)
        hu = fog.basis("H_u")
        for v in hu.T:
            assert abs(np.linalg.norm(t @ v) - 1) <= 10 * TOL
            assert abs(np.linalg.norm(numkit.adjoint(t) @ v) - 1) <= 10 * TOL
        comp = numkit.adjoint(hu) @ t @ hu
        again = splitting.foguel_split(comp)
        assert again.dims == {"H_u": hu.shape[1], "H_0": 0}
        hr = splitting.jdlg_split(t, samples=0).basis("H_r")
        # H_r inside H_u
        resid = hr - hu @ (numkit.adjoint(hu) @ hr)
        assert np.linalg.norm(resid, 2) <= 10 * TOL


def test_rejects_non_contraction():
    with pytest.raises(ValueError):
        splitting.foguel_split(np.diag([1.2, 0.1]))
    with pytest.raises(TypeError):
        splitting.foguel_split(BilateralShift())


def test_json_output():
    rng = np.random.default_rng(6)
    t, _ = block_conjugate([unimodular_diagonal(1, rng), random_contraction(2, rng, 0.5)], rng)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = splitting.jdlg_split(t, samples=1, horizon=50)
    doc = json.loads(res.to_json(t))
    assert doc["schema"] == "polystab.split/1"
    assert doc["dims"] == {"H_r": 1, "H_s": 2}
    assert "diagnostics" in doc and "bases" in doc
