"""Command-line experiment runner.

Each subcommand reads one JSON config (``--config``), prints a JSON summary
on stdout and, with ``--out``, writes CSV/JSON artifacts into that
directory. Exit codes: 0 success, 1 invalid input, 2 numerical failure,
3 a failed ``selftest`` criterion.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, acceptance, diskflow, ergodic, splitting
from .errors import ConfigError, NumericalError
from .operators import (DiagonalUnitary, Operator, decode_matrix, decode_vector,
                        operator_from_spec)
from .orbitlab import (aws_verdict, cesaro, fmt, kvn_extract, orbit_vectors, vdc_mean_bound,
                       vdc_stats, write_series_csv)
from .polyseq import IntPolynomial, in_class_P, values as poly_values

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SELFTEST = 0, 1, 2, 3


def _schema(name: str) -> str:
    return f"polystab.{name}/1"


def _cx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _cmat(m) -> list:
    return [[_cx(z) for z in row] for row in np.asarray(m)]


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing required key {key!r}")
    return cfg[key]


def _poly(coeffs, key: str = "poly") -> IntPolynomial:
    if not isinstance(coeffs, list) or not all(isinstance(c, int) for c in coeffs):
        raise ConfigError(f"{key} must be a list of integer coefficients, constant term first")
    p = IntPolynomial(tuple(coeffs))
    if not in_class_P(p):
        raise ConfigError(f"{key} = {coeffs} is not in class P")
    return p


def _positive(cfg: dict, key: str, default=None) -> int:
    val = cfg.get(key, default)
    if val is None:
        raise ConfigError(f"config is missing required key {key!r}")
    if isinstance(val, float) and val.is_integer():
        val = int(val)
    if not isinstance(val, int) or isinstance(val, bool) or val < 1:
        raise ConfigError(f"{key} must be a positive integer")
    return val


def _operator(cfg: dict, key: str = "operator") -> Operator:
    spec = _need(cfg, key)
    if not isinstance(spec, dict):
        raise ConfigError(f"{key} must be an operator object")
    try:
        return operator_from_spec(spec)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad operator spec: {exc}") from exc


def _out_path(args, name: str) -> Path | None:
    if args.out is None:
        return None
    os.makedirs(args.out, exist_ok=True)
    return Path(args.out) / name


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def cmd_split(cfg: dict, args) -> dict:
    op = _operator(cfg)
    method = cfg.get("method", "foguel")
    tol = float(cfg.get("tol", splitting.DEFAULT_TOL))
    if method == "foguel":
        res = splitting.foguel_split(op, tol)
    elif method == "jdlg":
        res = splitting.jdlg_split(op, tol, horizon=_positive(cfg, "horizon", 2000),
                                   samples=int(cfg.get("samples", 5)), seed=args.seed)
    elif method == "three_way":
        res = splitting.three_way_split(op, tol)
    else:
        raise ConfigError(f"unknown split method {method!r}")
    matrix = getattr(op, "matrix", None)
    doc = json.loads(res.to_json(matrix))
    doc["method"] = method
    path = _out_path(args, "split.json")
    if path:
        _write_json(path, doc)
    # bases go to the file; stdout keeps the summary
    doc.pop("bases", None)
    return doc


def _orbit_setup(cfg: dict):
    op = _operator(cfg)
    h = decode_vector(_need(cfg, "h"))
    p = _poly(cfg.get("poly", [0, 1]))
    return op, h, p


def cmd_orbit(cfg: dict, args) -> dict:
    op, h, p = _orbit_setup(cfg)
    gs = [decode_vector(g) for g in cfg.get("functionals", [_need(cfg, "h")])]
    horizon = _positive(cfg, "horizon", 10**4)
    tau = cfg.get("tau")
    rep = aws_verdict(op, h, gs, p, horizon, None if tau is None else float(tau))
    for i in range(len(gs)):
        path = _out_path(args, f"orbit_{i}.csv")
        if path:
            rep.write_csv(path, i)
    return rep.summary()


def cmd_vdc(cfg: dict, args) -> dict:
    op, h, p = _orbit_setup(cfg)
    horizon = _positive(cfg, "horizon", 10**4)
    lag_max = _positive(cfg, "lag_max", 50)
    exps = poly_values(p, horizon)
    st = vdc_stats(orbit_vectors(op, h, exps), lag_max)
    g_norm = float(cfg.get("g_norm", 1.0))
    path = _out_path(args, "vdc.csv")
    if path:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "gamma", "gamma_tilde"])
            for j in range(lag_max):
                w.writerow([j + 1, fmt(st.gamma[j]), fmt(st.gamma_tilde[j])])
    return {
        "schema": _schema("vdc"),
        "polynomial": list(p.coeffs),
        "horizon": st.horizon,
        "lag_max": st.lag_max,
        "sup_norm_sq": st.sup_norm_sq,
        "gamma": st.gamma.tolist(),
        "gamma_tilde": st.gamma_tilde.tolist(),
        "partial": {str(n): {"gamma": g.tolist(), "gamma_tilde": gt.tolist()}
                    for n, (g, gt) in st.partial.items()},
        "cesaro_bound": vdc_mean_bound(st, g_norm),
    }


def _generated_series(gen: dict, rng: np.random.Generator) -> np.ndarray:
    kind = _need(gen, "kind")
    n = _positive(gen, "n")
    idx = np.arange(1, n + 1)
    if kind == "squares":
        return (np.rint(np.sqrt(idx)) ** 2 == idx).astype(float)
    if kind == "cubes":
        return (np.rint(np.cbrt(idx)) ** 3 == idx).astype(float)
    if kind == "harmonic":
        return 1.0 / idx
    if kind == "random":
        return rng.random(n) ** float(gen.get("power", 4.0))
    raise ConfigError(f"unknown series kind {kind!r}")


def cmd_kvn(cfg: dict, args) -> dict:
    if "series" in cfg:
        y = np.asarray(cfg["series"], dtype=float)
        source = "supplied"
    else:
        gen = cfg.get("generate", {"kind": "squares", "n": 10**6})
        y = _generated_series(gen, np.random.default_rng(args.seed))
        source = gen["kind"]
    sel = kvn_extract(y)
    ces = cesaro(y)
    path = _out_path(args, "kvn.csv")
    if path:
        write_series_csv(path, y, ces, sel)
    return {
        "schema": _schema("kvn"),
        "source": source,
        "horizon": sel.horizon,
        "selected": len(sel),
        "excluded": sel.horizon - len(sel),
        "density": sel.density(),
        "max_selected": float(y[sel.indices - 1].max()) if len(sel) else 0.0,
        "final_level": int(sel.levels[-1]) if sel.levels.size else None,
        "cesaro": float(ces[-1]),
    }


def _flow_point(spec: dict):
    kind = spec.get("kind", "curve")
    if kind == "fixed":
        return diskflow.FixedPoint()
    if kind == "circle":
        return diskflow.CirclePoint(float(spec.get("s", 0.0)))
    if kind == "curve":
        return diskflow.CurvePoint(float(spec.get("s", 0.0)))
    raise ConfigError(f"unknown flow point kind {kind!r}")


def cmd_flow(cfg: dict, args) -> dict:
    name = cfg.get("observable", "f1")
    if name not in diskflow.OBSERVABLES:
        raise ConfigError(f"unknown observable {name!r}; choose from {sorted(diskflow.OBSERVABLES)}")
    f = diskflow.OBSERVABLES[name]
    n_max = _positive(cfg, "n_max", 1000)
    ser = diskflow.counterexample_series(f, n_max)
    aws_cfg = cfg.get("aws", {"point": {"kind": "curve", "s": 0.0}, "n_max": 10**5})
    aws_n = _positive(aws_cfg, "n_max", 10**5)
    aws = diskflow.aws_series(f, _flow_point(aws_cfg.get("point", {})), aws_n)
    p1, p2 = _out_path(args, "counterexample.csv"), _out_path(args, "aws.csv")
    if p1:
        ser.write_csv(p1)
        aws.write_csv(p2)
    marks = sorted({max(aws_n // 100, 1), max(aws_n // 10, 1), aws_n})
    return {
        "schema": _schema("flow"),
        "observable": name,
        "counterexample": {
            "n_max": n_max,
            "max_deviation_error": float(np.abs(ser.deviation - 1.0 / (2.0 * ser.t)).max()),
            "last_value": float(ser.values[-1]),
            "last_deviation": float(ser.deviation[-1]),
        },
        "aws": {
            "n_max": aws_n,
            "cesaro": {str(m): float(aws.cesaro[m - 1]) for m in marks},
            "density": aws.selection.density(),
        },
    }


def _ergodic_battery(cfg: dict, args) -> dict:
    cases = _positive(cfg, "cases", 100)
    rng = np.random.default_rng(args.seed)
    worst, rows = 0.0, []
    for i in range(cases):
        sys_, mats, req, n = ergodic.random_case(rng)
        rep = ergodic.equivalence_check(sys_, mats, req, n, cauchy=False)
        worst = max(worst, rep.max_discrepancy)
        rows.append((i, sys_.d, req.k, req.r, n, rep.max_discrepancy))
    path = _out_path(args, "ergodic_battery.csv")
    if path:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["case", "d", "k", "r", "N", "discrepancy"])
            for row in rows:
                w.writerow(list(row[:5]) + [fmt(row[5])])
    return {"schema": _schema("ergodic_battery"), "cases": cases, "seed": args.seed,
            "max_discrepancy": worst}


def cmd_ergodic(cfg: dict, args) -> dict:
    if "battery" in cfg:
        return _ergodic_battery(cfg["battery"], args)
    u = _operator(cfg, "u")
    if isinstance(u, DiagonalUnitary):
        u_arg = u
    elif hasattr(u, "matrix"):
        u_arg = u.matrix
    else:
        raise ConfigError("u must be a dense or diag_unitary operator")
    mats = [decode_matrix(a) for a in _need(cfg, "matrices")]
    polys = tuple(_poly(c, "polys") for c in _need(cfg, "polys"))
    alpha = tuple(_need(cfg, "alpha"))
    try:
        req = ergodic.AverageRequest(alpha, polys)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    grid = [_positive({"N": n}, "N") for n in _need(cfg, "grid")]
    form = cfg.get("form", "entangled")
    if form not in ("multiple", "entangled"):
        raise ConfigError("form must be 'multiple' or 'entangled'")
    system = ergodic.MatrixAlgebraSystem(u_arg)
    ser = ergodic.average_series(system, mats, req, grid, form)
    doc = {"schema": _schema("ergodic"), "form": form, "d": system.d, "k": req.k, "r": req.r,
           "grid": ser.grid, "phi_deltas": ser.phi_deltas, "op_deltas": ser.op_deltas,
           "bound": ser.bound, "within_bound": ser.within_bound(),
           "values": [_cmat(v) for v in ser.values]}
    if cfg.get("equivalence", True):
        doc["equivalence"] = [ergodic.equivalence_check(system, mats, req, n, cauchy=False).max_discrepancy
                              for n in grid]
    oracle = None
    if isinstance(u, DiagonalUnitary) and u.is_rational and req.r <= 2:
        oracle = ergodic.weyl_oracle(u.angles, mats, req)
        doc["oracle"] = {"matrix": _cmat(oracle),
                         "errors": [float(np.linalg.norm(v - oracle, 2)) for v in ser.values]}
    if "a0" in cfg:
        a0 = decode_matrix(cfg["a0"])
        weak = ergodic.gns_weak_series(system, a0, ser)
        doc["gns"] = {"values": [_cx(z) for z in weak]}
        if oracle is not None:
            target = system.phi(a0 @ oracle)
            doc["gns"]["fitted_C"] = max(n * abs(z - target) for n, z in zip(grid, weak))
    path = _out_path(args, "ergodic.json")
    if path:
        _write_json(path, doc)
    return doc


def cmd_selftest(cfg: dict, args) -> dict:
    results = acceptance.run_all(verbose=not args.quiet)
    doc = {"schema": _schema("selftest"), "passed": all(r.passed for r in results),
           "criteria": [r.to_dict() for r in results]}
    path = _out_path(args, "selftest.json")
    if path:
        _write_json(path, doc)
    return doc


COMMANDS = {
    "split": (cmd_split, "foguel / jdlg / three-way splitting of an operator"),
    "orbit": (cmd_orbit, "almost weak polynomial stability evidence along an orbit"),
    "vdc": (cmd_vdc, "van der Corput correlation statistics of an orbit"),
    "kvn": (cmd_kvn, "density-1 extraction on a supplied or generated series"),
    "flow": (cmd_flow, "disk-flow counterexample and almost weak stability series"),
    "ergodic": (cmd_ergodic, "multiple/entangled averages, oracle and identity checks"),
    "selftest": (cmd_selftest, "run the acceptance suite"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polystab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="directory for CSV/JSON artifacts")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--quiet", action="store_true", help="suppress progress on stderr")
    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _error(kind: str, exc: Exception, code: int) -> int:
    print(json.dumps({"schema": _schema("error"), "kind": kind, "type": type(exc).__name__,
                      "message": str(exc), "exit_code": code}, sort_keys=True))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        return _error("config", ConfigError("seed must be an unsigned 64-bit integer"), EXIT_CONFIG)
    handler = COMMANDS[args.command][0]
    try:
        cfg = _load_config(args.config)
        doc = handler(cfg, args)
    except (NumericalError, OverflowError) as exc:
        return _error("numerical", exc, EXIT_NUMERICAL)
    except (ValueError, KeyError, TypeError) as exc:
        return _error("config", exc, EXIT_CONFIG)
    print(json.dumps(doc, sort_keys=True, default=_json_default))
    if args.command == "selftest" and not doc["passed"]:
        return EXIT_SELFTEST
    return EXIT_OK


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


if __name__ == "__main__":
    sys.exit(main())
