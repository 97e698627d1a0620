"""Run orchestration: config ingestion, command dispatch, report emission.

Usage:
    finslerlab <command> --config <run.yaml> [--out <dir>] [--seed <int>]

Commands: tensors, geodesic, soliton-check, identity-suite, verify-bounds,
berwald-check.  The run config is the experiment record; command-line flags
only override fields of the file.  Exit status is 0 iff every requested
verdict passes (2 on configuration errors).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field as dc_field

import numpy as np

from .configio import load_tracked
from .errors import ConfigInvalid, FinslerError, HypothesisNotMet, SpecInvalid

COMMANDS = ("tensors", "geodesic", "soliton-check", "identity-suite",
            "verify-bounds", "berwald-check")

PLOT_COLUMNS = ("d", "S", "tau", "R", "bound_S", "bound_tau_lo", "bound_tau_hi",
                "bound_R_lo", "bound_R_hi")


@dataclass
class RunConfig:
    command: str
    metric_path: str
    out_dir: str
    seed: int = 0
    measure_override: dict | None = None
    params: dict = dc_field(default_factory=dict)


def load_run_config(path, command=None, out=None, seed=None) -> RunConfig:
    doc = load_tracked(path)
    cmd = doc.get("command", command)
    if command is not None:
        if doc.get("command") not in (None, command):
            doc.fail("command", f"config command {doc.get('command')!r} does not "
                                f"match CLI command {command!r}")
        cmd = command
    if cmd not in COMMANDS:
        doc.fail("command", f"command must be one of {COMMANDS}")
    metric_path = doc.require("metric")
    base = os.path.dirname(os.path.abspath(path))
    if not os.path.isabs(metric_path):
        metric_path = os.path.join(base, metric_path)
    out_dir = out or doc.get("out", "out")
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(base, out_dir)
    seed_val = seed if seed is not None else doc.get("seed", 0)
    if not isinstance(seed_val, int):
        doc.fail("seed", "seed must be an integer")
    params = doc.get("params", {}) or {}
    if not isinstance(params, dict):
        doc.fail("params", "params must be a mapping")
    for key, val in params.items():
        if key.endswith(("tol", "tolerance")) and isinstance(val, (int, float)):
            if val <= 0:
                doc.fail(f"params.{key}", "tolerances must be > 0")
    if "fan" in params and (not isinstance(params["fan"], int) or params["fan"] < 4):
        doc.fail("params.fan", "fan size must be an integer >= 4")
    measure = doc.get("measure")
    if measure is not None and not isinstance(measure, dict):
        doc.fail("measure", "measure override must be a mapping")
    return RunConfig(command=cmd, metric_path=metric_path, out_dir=out_dir,
                     seed=seed_val, measure_override=measure, params=params)


def _resolve_measure(cfg: RunConfig, measure_from_spec):
    from .catalog import MeasureSpec
    if not cfg.measure_override:
        return measure_from_spec
    ov = cfg.measure_override
    return MeasureSpec(
        kind=str(ov.get("kind", measure_from_spec.kind)),
        log_quad=float(ov.get("log_quad", 0.0)),
        log_lin=tuple(ov.get("log_lin", ()) or ()),
        log_const=float(ov.get("log_const", 0.0)),
        quadrature=int(ov.get("quadrature", 0)),
    )


def _vector(params, name, n, default=None):
    v = params.get(name, default)
    if v is None:
        raise ConfigInvalid(f"missing required parameter '{name}'", field=f"params.{name}")
    arr = np.asarray(v, dtype=float)
    if arr.shape != (n,):
        raise ConfigInvalid(f"parameter '{name}' must have length {n}",
                            field=f"params.{name}")
    return arr


# -- command implementations ---------------------------------------------------

def cmd_tensors(cfg, spec, measure):
    from .curvature import curvature_frame, measure_frame
    from .jets import PointTangent
    from .tensors import tensor_frame

    n = spec.dimension
    x = _vector(cfg.params, "point", n, [0.0] * n)
    y = _vector(cfg.params, "direction", n, [1.0] + [0.0] * (n - 1))
    p = PointTangent(x, y)
    tf = tensor_frame(spec, p)
    cf = curvature_frame(spec, p)
    mf = measure_frame(spec, measure, p)

    checks = {
        "g-positive-definite": bool(np.linalg.eigvalsh(tf.g)[0] > 0),
        "g-inverse": bool(np.max(np.abs(tf.g @ tf.g_inv - np.eye(n))) < 1e-10),
        "gyy-equals-F2": bool(abs(float(p.y @ tf.g @ p.y) - tf.F**2)
                              <= 1e-10 * max(1.0, tf.F**2)),
        "cartan-y-contraction": bool(np.max(np.abs(np.einsum("ijk,k->ij", tf.C, p.y))) < 1e-10),
        "gamma-torsion-free": bool(np.max(np.abs(tf.Gamma - np.swapaxes(tf.Gamma, 1, 2))) < 1e-10),
        "r4-antisymmetry": bool(np.max(np.abs(cf.R4 + np.swapaxes(cf.R4, 2, 3))) < 1e-7),
        "ricci-trace-consistency": bool(
            abs(cf.ric - float(np.einsum("jk,jk->", cf.g_inv, cf.flag_low))) < 1e-9
            * max(1.0, abs(cf.ric))),
    }
    tree = {"frame": {"F": tf.F, "g": tf.g, "g_inv": tf.g_inv, "C": tf.C,
                      "I": tf.I, "G": tf.G, "N": tf.N, "Gamma": tf.Gamma},
            "curvature": {"ric": cf.ric, "scalarR": cf.scalarR, "R4": cf.R4,
                          "P4": cf.P4, "L": cf.L, "J": cf.J,
                          "barRic": cf.barRic, "tildeRic": cf.tildeRic},
            "measure": {"sigma": mf.sigma, "tau": mf.tau, "S": mf.S,
                        "Sdot": mf.Sdot, "tauGrad": mf.tauGrad,
                        "tauHess": mf.tauHess,
                        "ricN": {str(k): v for k, v in mf.ricN.items()}},
            "checks": checks}
    return checks, tree, {}


def cmd_geodesic(cfg, spec, measure):
    from .geodesics import integrate_geodesic, sample_along, write_path_csv
    from .jets import PointTangent

    n = spec.dimension
    x = _vector(cfg.params, "point", n, [0.0] * n)
    y = _vector(cfg.params, "direction", n, [1.0] + [0.0] * (n - 1))
    t_end = float(cfg.params.get("t_end", 1.0))
    tol = float(cfg.params.get("tol", 1e-8))
    samples = int(cfg.params.get("samples", 0))
    fields = list(cfg.params.get("fields", []))

    path = integrate_geodesic(spec, PointTangent(x, y), t_end, tol=tol, samples=samples)
    cols = sample_along(spec, measure, path, fields) if fields else {}
    checks = {"unit-speed-drift": bool(path.f_drift <= tol),
              "stayed-in-chart": bool(not path.left_chart)}
    tree = {"t_end": t_end, "samples": len(path.t), "f_drift": path.f_drift,
            "left_chart": path.left_chart, "t_exit": path.t_exit,
            "endpoint_x": path.x[-1], "endpoint_y": path.y[-1], "checks": checks}
    tables = {"path": ("geodesic", path, cols)}
    return checks, tree, tables


def cmd_soliton_check(cfg, spec, measure):
    from .verify import soliton_residual, soliton_sample_set

    kind = str(cfg.params.get("kind", "asymmetric-essential"))
    sigma_mode = str(cfg.params.get("sigma_mode", "constant-half"))
    points = int(cfg.params.get("points", 50))
    tol = float(cfg.params.get("tolerance", 1e-5))
    samples = soliton_sample_set(
        spec, seed=cfg.seed, points=points,
        ys_per_x=int(cfg.params.get("ys_per_x", 1)),
        vw_per_point=int(cfg.params.get("vw_per_point", 4)),
        radius_frac=float(cfg.params.get("radius_frac", 0.5)))
    rep = soliton_residual(spec, measure, kind, sigma_mode, samples, tolerance=tol)
    checks = {f"soliton-{kind}": rep.verdict}
    return checks, {"report": rep}, {}


def cmd_identity_suite(cfg, spec, measure):
    from .verify import identity_suite, soliton_sample_set

    points = int(cfg.params.get("points", 50))
    samples = soliton_sample_set(spec, seed=cfg.seed, points=points,
                                 radius_frac=float(cfg.params.get("radius_frac", 0.5)))
    reports = identity_suite(spec, measure, [s.point for s in samples],
                             tolerances=cfg.params.get("tolerances"))
    checks = {f"identity-{r.definition}": r.verdict for r in reports}
    return checks, {"reports": reports}, {}


def cmd_verify_bounds(cfg, spec, measure):
    from .verify import ricci_bound_growth_check, scalar_growth_bounds_check

    n = spec.dimension
    pole = _vector(cfg.params, "pole", n, [0.0] * n)
    fan = int(cfg.params.get("fan", 16))
    t_max = float(cfg.params.get("t_max", 6.0))
    samples = int(cfg.params.get("samples", 0))
    which = cfg.params.get("checks", ["ricci-bound", "scalar-growth"])

    checks, tree, tables = {}, {}, {}
    for name in which:
        try:
            if name == "ricci-bound":
                rep = ricci_bound_growth_check(
                    spec, measure, pole, fan, t_max, samples=samples,
                    spot_checks=int(cfg.params.get("spot_checks", 0)))
            elif name == "scalar-growth":
                k1 = cfg.params.get("K1")
                rep = scalar_growth_bounds_check(
                    spec, measure, pole, fan, t_max, samples=samples,
                    K1=None if k1 is None else float(k1))
            else:
                raise ConfigInvalid(f"unknown bound check {name!r}",
                                    field="params.checks")
            checks[name] = bool(rep.verdict and rep.hypothesis_ok)
            tree[name] = {"hypothesis_ok": rep.hypothesis_ok, "fitted": rep.fitted,
                          "margins": rep.margins, "info": rep.info,
                          "verdict": rep.verdict}
            tables[name] = ("bounds", rep)
        except HypothesisNotMet as exc:
            checks[name] = False
            tree[name] = {"hypothesis_ok": False, "reason": str(exc)}
    return checks, tree, tables


def cmd_berwald_check(cfg, spec, measure):
    from .verify import BoundReport, berwald_scalar_check, geodesic_fan

    n = spec.dimension
    pole = _vector(cfg.params, "pole", n, [0.0] * n)
    count = int(cfg.params.get("paths", 10))
    t_max = float(cfg.params.get("t_max", 2.0))
    paths = geodesic_fan(spec, pole, count, t_max, seed=cfg.seed)
    rep = berwald_scalar_check(spec, measure, paths)
    per = rep.pop("per_geodesic")
    shim = BoundReport(check="berwald", hypothesis_ok=True, fitted={},
                       margins={}, verdict=rep["verdict"], per_geodesic=per)
    return ({"berwald-scalar": rep["verdict"]}, {"report": rep},
            {"berwald": ("bounds", shim)})


_DISPATCH = {
    "tensors": cmd_tensors,
    "geodesic": cmd_geodesic,
    "soliton-check": cmd_soliton_check,
    "identity-suite": cmd_identity_suite,
    "verify-bounds": cmd_verify_bounds,
    "berwald-check": cmd_berwald_check,
}


def emit_plotdata(report, kind: str, out_dir: str) -> list:
    """Per-geodesic and aggregate CSVs with the fixed bound-check columns."""
    from .reporting import write_csv

    os.makedirs(out_dir, exist_ok=True)
    written = []
    agg = {c: [] for c in PLOT_COLUMNS}

    def bound_cols(d):
        nanv = np.full_like(d, math.nan)
        f = report.fitted
        if kind == "ricci-bound" and f:
            return {"bound_S": 0.5 * (d - f["K0"]),
                    "bound_tau_lo": 0.25 * (d - f["K0"]) ** 2 - f["K0_prime"],
                    "bound_tau_hi": nanv, "bound_R_lo": nanv, "bound_R_hi": nanv}
        if kind == "scalar-growth" and f:
            ab = f["alpha"] + f["beta"]
            return {"bound_S": nanv,
                    "bound_tau_lo": 0.25 * (d - f["C2_tau_lower"]) ** 2 - ab,
                    "bound_tau_hi": 0.25 * (d + f["C1_tau_upper"]) ** 2 - ab,
                    "bound_R_lo": (0.25 * (d - f["C2_tau_lower"]) ** 2
                                   - f["gamma"] * d + f["delta"] - ab
                                   - f["R_lower_offset"]),
                    "bound_R_hi": (0.25 * (d + f["C_R_upper"]) ** 2
                                   + f["gamma"] * d - f["alpha"])}
        return {k: nanv for k in ("bound_S", "bound_tau_lo", "bound_tau_hi",
                                  "bound_R_lo", "bound_R_hi")}

    for i, g in enumerate(report.per_geodesic):
        d = np.asarray(g["d"])
        rcol = g.get("scalarR", g.get("Ric", np.full_like(d, math.nan)))
        cols = {"d": d, "S": np.asarray(g["S"]), "tau": np.asarray(g["tau"]),
                "R": np.asarray(rcol)}
        cols.update(bound_cols(d))
        path = os.path.join(out_dir, f"geodesic_{i:03d}.csv")
        write_csv(path, list(PLOT_COLUMNS), [cols[c] for c in PLOT_COLUMNS])
        written.append(path)
        for c in PLOT_COLUMNS:
            agg[c].append(cols[c])
    path = os.path.join(out_dir, "aggregate.csv")
    agg_cols = [np.concatenate(agg[c]) if agg[c] else np.array([]) for c in PLOT_COLUMNS]
    write_csv(path, list(PLOT_COLUMNS), agg_cols)
    written.append(path)
    return written


def run(cfg: RunConfig) -> int:
    """Execute one command; writes report.json, summary.txt, tables/ CSVs."""
    from .catalog import load_metric_spec, validate_spec
    from .geodesics import write_path_csv
    from .reporting import jsonable, summary_lines, write_json

    spec, measure_from_spec = load_metric_spec(cfg.metric_path)
    validate_spec(spec, samples=int(cfg.params.get("validate_samples", 100)))
    measure = _resolve_measure(cfg, measure_from_spec)

    checks, tree, tables = _DISPATCH[cfg.command](cfg, spec, measure)

    os.makedirs(cfg.out_dir, exist_ok=True)
    report = {
        "command": cfg.command,
        "metric": {"file": os.path.basename(cfg.metric_path),
                   "label": spec.label()},
        "measure": measure.kind,
        "seed": cfg.seed,
        "verdicts": checks,
        "result": jsonable(tree),
    }
    write_json(os.path.join(cfg.out_dir, "report.json"), report)

    table_dir = os.path.join(cfg.out_dir, "tables")
    for name, payload in tables.items():
        os.makedirs(table_dir, exist_ok=True)
        if payload[0] == "geodesic":
            _, path, cols = payload
            write_path_csv(path, os.path.join(table_dir, "path.csv"), cols)
        elif payload[0] == "bounds":
            emit_plotdata(payload[1], name, os.path.join(table_dir, name))

    lines = summary_lines(checks)
    lines.insert(0, f"{cfg.command} on {spec.label()} (measure: {measure.kind}, "
                    f"seed {cfg.seed})")
    with open(os.path.join(cfg.out_dir, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for ln in lines:
        print(ln)
    return 0 if all(checks.values()) else 1


def main(argv=None) -> int:
    threads = os.environ.get("FINSLERLAB_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    parser = argparse.ArgumentParser(
        prog="finslerlab",
        description="Finsler metric measure space laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", required=True, help="run config YAML")
        sp.add_argument("--out", default=None, help="output directory override")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
    args = parser.parse_args(argv)

    try:
        cfg = load_run_config(args.config, command=args.command,
                              out=args.out, seed=args.seed)
        return run(cfg)
    except (ConfigInvalid, SpecInvalid) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FinslerError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
