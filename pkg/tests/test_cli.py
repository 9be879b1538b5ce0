import csv
import json

import numpy as np
import pytest

from polystab import cli

WEYL_CFG = {
    "u": {"kind": "diag_unitary", "angles": [0, "1/3", "2/3"]},
    "matrices": [[[1] * 3] * 3, [[1] * 3] * 3],
    "alpha": [1, 1],
    "polys": [[0, 0, 1]],
    "grid": [30, 301],
    "a0": [[1, 0, 0], [0, 0, 0], [0, 0, 0]],
}


def run(capsys, tmp_path, cmd, cfg=None, *extra):
    argv = [cmd, "--quiet"]
    if cfg is not None:
        path = tmp_path / f"{cmd}_cfg.json"
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    argv += list(extra)
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_split(tmp_path, capsys):
    cfg = {"operator": {"kind": "dense", "entries": [[0, 1], [0, 0]]}, "method": "foguel"}
    code, doc = run(capsys, tmp_path, "split", cfg, "--out", str(tmp_path))
    assert code == 0 and doc["dims"] == {"H_u": 0, "H_0": 2}
    assert "bases" not in doc
    assert "bases" in json.loads((tmp_path / "split.json").read_text())
    code, doc = run(capsys, tmp_path, "split", {"operator": {"kind": "bilateral_shift"}, "method": "three_way"})
    assert code == 0 and doc["dims"]["H_us"] == "all"


def test_orbit(tmp_path, capsys):
    cfg = {"operator": {"kind": "bilateral_shift"}, "h": {"support": {"0": 1}}, "poly": [0, 0, 1],
           "horizon": 1000}
    code, doc = run(capsys, tmp_path, "orbit", cfg, "--out", str(tmp_path))
    assert code == 0 and doc["verdict"]
    rows = list(csv.reader(open(tmp_path / "orbit_0.csv")))
    assert len(rows) == 1001


def test_vdc(tmp_path, capsys):
    cfg = {"operator": {"kind": "diag_unitary", "angles": ["1/7"]}, "h": [1], "horizon": 200, "lag_max": 5}
    code, doc = run(capsys, tmp_path, "vdc", cfg, "--out", str(tmp_path))
    assert code == 0
    assert np.allclose(doc["gamma_tilde"], [(200 - j) / 200 for j in range(1, 6)], atol=1e-12)
    rows = list(csv.reader(open(tmp_path / "vdc.csv")))
    assert rows[0] == ["j", "gamma", "gamma_tilde"] and len(rows) == 6


def test_kvn_default_squares(tmp_path, capsys):
    code, doc = run(capsys, tmp_path, "kvn")
    assert code == 0 and doc["density"] == 0.999 and doc["excluded"] == 1000
    code, doc = run(capsys, tmp_path, "kvn", {"series": [0, 0, 1, 0]})
    assert code == 0 and doc["selected"] == 3


def test_flow(tmp_path, capsys):
    cfg = {"n_max": 200, "aws": {"point": {"kind": "curve"}, "n_max": 1000}}
    code, doc = run(capsys, tmp_path, "flow", cfg, "--out", str(tmp_path))
    assert code == 0 and doc["counterexample"]["max_deviation_error"] <= 1e-12
    with open(tmp_path / "counterexample.csv") as fh:
        for row in csv.DictReader(fh):
            assert abs(float(row["deviation"]) - 1 / (2 * int(row["t"]))) <= 1e-12
    assert (tmp_path / "aws.csv").exists()


def test_ergodic_oracle(tmp_path, capsys):
    code, doc = run(capsys, tmp_path, "ergodic", WEYL_CFG, "--out", str(tmp_path))
    assert code == 0 and doc["within_bound"]
    assert max(doc["equivalence"]) <= 1e-12
    assert doc["oracle"]["errors"][0] <= 1e-13
    assert doc["gns"]["fitted_C"] <= 1.0
    assert (tmp_path / "ergodic.json").exists()


def test_ergodic_battery(tmp_path, capsys):
    code, doc = run(capsys, tmp_path, "ergodic", {"battery": {"cases": 30}}, "--out", str(tmp_path), "--seed", "3")
    assert code == 0 and doc["max_discrepancy"] <= 1e-12
    assert len(list(csv.reader(open(tmp_path / "ergodic_battery.csv")))) == 31


def test_outputs_deterministic(tmp_path, capsys):
    cfg = {"battery": {"cases": 10}}
    a, b = tmp_path / "a", tmp_path / "b"
    run(capsys, tmp_path, "ergodic", cfg, "--out", str(a), "--seed", "9")
    run(capsys, tmp_path, "ergodic", cfg, "--out", str(b), "--seed", "9")
    assert (a / "ergodic_battery.csv").read_bytes() == (b / "ergodic_battery.csv").read_bytes()
    run(capsys, tmp_path, "flow", {"n_max": 100, "aws": {"n_max": 100}}, "--out", str(a))
    run(capsys, tmp_path, "flow", {"n_max": 100, "aws": {"n_max": 100}}, "--out", str(b))
    for name in ("counterexample.csv", "aws.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_errors(tmp_path, capsys):
    code, doc = run(capsys, tmp_path, "split", {"operator": {"kind": "dense", "entries": [[2]]}})
    assert code == 1 and doc["kind"] == "config"
    code, doc = run(capsys, tmp_path, "orbit", {"operator": {"kind": "bilateral_shift"}, "h": [1],
                                                "poly": [-3, 1]})
    assert code == 1
    code, doc = run(capsys, tmp_path, "kvn", {"generate": {"kind": "primes", "n": 10}})
    assert code == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["kvn", "--config", str(bad)]) == 1
    assert json.loads(capsys.readouterr().out)["exit_code"] == 1
    code, doc = run(capsys, tmp_path, "kvn", None, "--seed", str(2**64))
    assert code == 1


def test_numerical_error_exit(tmp_path, capsys):
    cfg = dict(WEYL_CFG, polys=[[0, 0, 0, 0, 1]], grid=[70000], equivalence=False)
    code, doc = run(capsys, tmp_path, "ergodic", cfg)
    assert code == 2 and doc["kind"] == "numerical"
    code, doc = run(capsys, tmp_path, "flow", {"n_max": 10**8})
    assert code == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "polystab" in capsys.readouterr().out
