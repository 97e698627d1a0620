"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every tolerance is pinned here, nothing is deferred to calibration.
"""
import itertools
import math

import numpy as np

from finslerlab.catalog import BH_MEASURE, GAUSSIAN_MEASURE
from finslerlab.curvature import (curvature_frame, distortion, flag_curvature,
                                  s_curvature)
from finslerlab.engine import metric_functions
from finslerlab.geodesics import integrate_geodesic
from finslerlab.jets import PointTangent, evaluate_jet, fd_jet_oracle
from finslerlab.verify import (berwald_scalar_check, geodesic_fan,
                               identity_suite, ricci_bound_growth_check,
                               scalar_growth_bounds_check,
                               second_variation_check,
                               soliton_identity_residual, soliton_residual,
                               soliton_sample_set)

from . import oracles
from .conftest import (euclidean, funk, hyperbolic, interior_points, minkowski,
                       randers, sphere)


def _line(ok: bool, label: str, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return ok


# -- 1. Riemannian reduction ------------------------------------------------------

def test_criterion_1_riemannian_reduction():
    worst_rel = 0.0
    worst_nonriem = 0.0
    for base, spec in (("sphere-stereographic", sphere(2)),
                       ("hyperbolic-poincare", hyperbolic(2))):
        for p in interior_points(spec, 100, seed=101):
            fr = curvature_frame(spec, p)
            R4o = oracles.riemann_tensor(base, 1.0, p.x)
            rico = float(p.y @ oracles.ricci_tensor(base, 1.0, p.x) @ p.y)
            scalo = oracles.riemann_scalar(base, 1.0, p.x)
            worst_rel = max(
                worst_rel,
                float(np.max(np.abs(fr.R4 - R4o))) / max(np.max(np.abs(R4o)), 1e-30),
                abs(fr.ric - rico) / max(abs(rico), 1e-30),
                abs(fr.scalarR - scalo) / max(abs(scalo), 1e-30))
            worst_nonriem = max(worst_nonriem, *(float(np.max(np.abs(t))) for t in (
                fr.P4, fr.L, fr.J)))
            jet_c = metric_functions(spec).bundle(p.x, p.y)
            worst_nonriem = max(worst_nonriem, float(np.max(np.abs(jet_c[3]))),
                                float(np.max(np.abs(jet_c[4]))))
    ok = worst_rel <= 1e-5 and worst_nonriem <= 1e-8
    assert _line(ok, "criterion 1 (riemannian reduction)",
                 f"max rel err {worst_rel:.2e} (tol 1e-5); "
                 f"max |C,I,L,J,P| {worst_nonriem:.2e} (tol 1e-8)")


# -- 2. Flat suite ------------------------------------------------------------------

def test_criterion_2_flat_suite():
    worst_curv = 0.0
    worst_s = 0.0
    for spec in (euclidean(2), minkowski(2)):
        for p in interior_points(spec, 50, seed=102):
            fr = curvature_frame(spec, p)
            worst_curv = max(worst_curv, *(float(np.max(np.abs(t))) for t in (
                fr.R4, fr.P4, fr.L, fr.J, fr.flag_low)),
                abs(fr.ric), abs(fr.scalarR))
        for p in interior_points(spec, 10, seed=103, radius_frac=0.2):
            S, _ = s_curvature(spec, BH_MEASURE, p)
            worst_s = max(worst_s, abs(S))
    # distortion: tau == 0 for euclidean + BH ...
    worst_tau = 0.0
    for p in interior_points(euclidean(2), 10, seed=104):
        worst_tau = max(worst_tau, abs(distortion(euclidean(2), BH_MEASURE, p)))
    # ... and for minkowski-randers + BH tau is a function of y alone
    # (x-invariance is the flat-measure content; tau(y) itself is nonzero)
    spec = minkowski(2)
    spread = 0.0
    rng = np.random.default_rng(105)
    for _ in range(4):
        y = rng.standard_normal(2)
        y /= metric_functions(spec).f(np.zeros(2), y)
        taus = [distortion(spec, BH_MEASURE, PointTangent(x, y))
                for x in rng.uniform(-5, 5, (10, 2))]
        spread = max(spread, max(taus) - min(taus))
    ok = worst_curv <= 1e-9 and worst_s <= 1e-6 and worst_tau <= 1e-6 and spread <= 1e-6
    assert _line(ok, "criterion 2 (flat suite)",
                 f"max curvature {worst_curv:.2e} (tol 1e-9); max |S| {worst_s:.2e} "
                 f"(tol 1e-6); tau(euclid+BH) {worst_tau:.2e} (tol 1e-6); "
                 f"tau x-spread(minkowski+BH) {spread:.2e} (tol 1e-6)")


# -- 3. Funk metric -----------------------------------------------------------------

def test_criterion_3_funk():
    spec = funk(2)
    rng = np.random.default_rng(106)
    worst_flag = 0.0
    for p in interior_points(spec, 50, seed=107, radius_frac=0.45):
        fr = curvature_frame(spec, p)
        v = rng.standard_normal(2)
        worst_flag = max(worst_flag, abs(flag_curvature(fr, fr.g, v) + 0.25))
    worst_s = 0.0
    fns = metric_functions(spec)
    for p in interior_points(spec, 20, seed=108, radius_frac=0.4):
        S, _ = s_curvature(spec, BH_MEASURE, p)
        worst_s = max(worst_s, abs(S - 1.5 * fns.f(p.x, p.y)))
    ok = worst_flag <= 1e-3 and worst_s <= 1e-3
    assert _line(ok, "criterion 3 (funk)",
                 f"max |K + 1/4| {worst_flag:.2e} at 50 flags (tol 1e-3); "
                 f"max |S - (n+1)/2 F| {worst_s:.2e} (tol 1e-3)")


# -- 4. Gaussian soliton --------------------------------------------------------------

def test_criterion_4_gaussian_soliton():
    spec = euclidean(2)
    samples = soliton_sample_set(spec, seed=109, points=200, vw_per_point=4)
    rep = soliton_residual(spec, GAUSSIAN_MEASURE, "asymmetric-essential",
                           "constant-half", samples, tolerance=1e-5)

    worst_key = 0.0
    for p in interior_points(spec, 10, seed=110, radius_frac=0.06):
        res = soliton_identity_residual(spec, GAUSSIAN_MEASURE, p)
        worst_key = max(worst_key, float(np.max(np.abs(res))))

    rb = ricci_bound_growth_check(spec, GAUSSIAN_MEASURE, np.zeros(2),
                                  fan=16, t_max=6.0, spot_checks=1)
    sg = scalar_growth_bounds_check(spec, GAUSSIAN_MEASURE, np.zeros(2),
                                    fan=16, t_max=6.0)
    margins_ok = all(m >= -1e-8 for m in sg.margins.values()) \
        and all(m >= -1e-8 for m in rb.margins.values())
    spot_ok = all(c["gap"] <= 1e-4
                  for c in rb.info["minimality_spot_checks"])
    ok = (rep.verdict and worst_key <= 1e-4
          and rb.hypothesis_ok and abs(rb.fitted["K0"]) <= 1e-3
          and abs(rb.fitted["K0_prime"]) <= 1e-3
          and sg.fitted["C1_tau_upper"] <= 1e-3
          and sg.fitted["C2_tau_lower"] <= 1e-3 and margins_ok and spot_ok)
    assert _line(ok, "criterion 4 (gaussian soliton)",
                 f"soliton residual {rep.max_residual:.2e} at 200 pts (tol 1e-5); "
                 f"key identity {worst_key:.2e} (tol 1e-4); "
                 f"K0 {rb.fitted['K0']:.2e}, K0' {rb.fitted['K0_prime']:.2e} (tol 1e-3); "
                 f"C1 {sg.fitted['C1_tau_upper']:.2e}, C2 {sg.fitted['C2_tau_lower']:.2e}; "
                 f"min margin {min(min(sg.margins.values()), min(rb.margins.values())):.1e}")


# -- 5. Identity suite -----------------------------------------------------------------

def test_criterion_5_identity_suite():
    details = []
    ok = True
    for spec in (randers(3), funk(3)):
        pts = [s.point for s in soliton_sample_set(spec, seed=111, points=50,
                                                   radius_frac=0.45)]
        for rep in identity_suite(spec, BH_MEASURE, pts):
            ok = ok and rep.max_residual <= 1e-4
            details.append(f"{spec.family[:4]}/{rep.definition}={rep.max_residual:.1e}")
    assert _line(ok, "criterion 5 (identity suite, 50 pts each)",
                 "; ".join(details) + " (tol 1e-4)")


# -- 6. Second variation ----------------------------------------------------------------

def test_criterion_6_second_variation():
    spec = sphere(2)
    p0 = PointTangent(np.zeros(2), np.array([0.0, 1.0]))
    path = integrate_geodesic(spec, p0, 2.0, samples=201)
    r1 = second_variation_check(spec, BH_MEASURE, path, "paper-piecewise")
    r2 = second_variation_check(spec, BH_MEASURE, path, "sin-bump")

    fspec = funk(2)
    fpath = integrate_geodesic(fspec, PointTangent(np.array([-0.3, 0.0]),
                                                   np.array([1.0, 0.0])), 2.0,
                               samples=201)
    r3 = second_variation_check(fspec, BH_MEASURE, fpath, "sin-bump")
    ok = r1["verdict"] and r2["verdict"] and r3["verdict"] and r3["margin"] > 0
    assert _line(ok, "criterion 6 (second variation)",
                 f"sphere margins {r1['margin']:.4f} (piecewise), {r2['margin']:.4f} "
                 f"(sine); funk margin {r3['margin']:.4f} > 0")


# -- 7. Berwald check --------------------------------------------------------------------

def test_criterion_7_berwald():
    spec = sphere(2)
    paths = geodesic_fan(spec, np.array([0.1, -0.05]), 10, 1.5)
    rep = berwald_scalar_check(spec, BH_MEASURE, paths)
    ok = rep["max_scalarR_sd"] <= 1e-5 and math.isfinite(rep["sup_abs_scalarR"])
    assert _line(ok, "criterion 7 (berwald scalar)",
                 f"scalarR sd {rep['max_scalarR_sd']:.2e} over 10 geodesics "
                 f"(tol 1e-5); sup |R| = {rep['sup_abs_scalarR']:.6f}")


# -- 8. Derivative engine vs oracle --------------------------------------------------------

def _multi(n, deg):
    out = []
    for idx in itertools.combinations_with_replacement(range(n), deg):
        e = [0] * n
        for i in idx:
            e[i] += 1
        out.append(tuple(e))
    return out


def test_criterion_8_derivative_engine():
    families = {
        "euclidean": euclidean(2), "sphere": sphere(2), "hyperbolic": hyperbolic(2),
        "randers": randers(2), "funk": funk(2), "minkowski": minkowski(2),
    }
    requests = ((3, 1), (2, 2), (1, 3), (0, 4))
    worst = 0.0
    worst_at = ""
    for name, spec in families.items():
        for k, p in enumerate(interior_points(spec, 100, seed=112,
                                              radius_frac=0.4, unit_f=False)):
            jets = {r: evaluate_jet(spec, p, *r) for r in requests}
            for a in range(4):
                for b in range(5):
                    if not 1 <= a + b <= 4:
                        continue
                    src = next(j for (ox, oy), j in jets.items()
                               if a <= ox and b <= oy)
                    for alpha in _multi(2, a):
                        for beta in _multi(2, b):
                            ad = src.partial(alpha, beta)
                            fd = fd_jet_oracle(spec, p, alpha, beta)
                            rel = abs(ad - fd) / max(1.0, abs(ad), abs(fd))
                            if rel > worst:
                                worst = rel
                                worst_at = f"{name} a={alpha} b={beta}"
    ok = worst <= 1e-6
    assert _line(ok, "criterion 8 (derivative engine, 6 families x 100 pts)",
                 f"max rel err {worst:.2e} at {worst_at} (tol 1e-6)")


# -- 9. Reproducibility ------------------------------------------------------------------

def test_criterion_9_reproducibility(tmp_path):
    from finslerlab.cli import main
    (tmp_path / "gauss.yaml").write_text(
        "dimension: 2\nfamily: euclidean\nchart: {kind: ball, radius: 50.0}\n"
        "measure: {kind: explicit-density, log_quad: -0.25}\n")
    cfg = ("command: verify-bounds\nmetric: gauss.yaml\nout: {out}\nseed: 5\n"
           "params: {{pole: [0.0, 0.0], fan: 6, t_max: 3.0}}\n")
    (tmp_path / "a.yaml").write_text(cfg.format(out="outA"))
    (tmp_path / "b.yaml").write_text(cfg.format(out="outB"))
    assert main(["verify-bounds", "--config", str(tmp_path / "a.yaml")]) == 0
    assert main(["verify-bounds", "--config", str(tmp_path / "b.yaml")]) == 0
    same = True
    for rel in ("report.json", "summary.txt",
                "tables/ricci-bound/aggregate.csv",
                "tables/scalar-growth/aggregate.csv",
                "tables/scalar-growth/geodesic_000.csv"):
        ba = (tmp_path / "outA" / rel).read_bytes()
        bb = (tmp_path / "outB" / rel).read_bytes()
        same = same and ba == bb
    assert _line(same, "criterion 9 (reproducibility)",
                 "identical config+seed gives byte-identical report tree and CSVs")
