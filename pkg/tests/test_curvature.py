import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslerlab.catalog import BH_MEASURE, GAUSSIAN_MEASURE
from finslerlab.curvature import (bh_density, chern_P, chern_riemann,
                                  curvature_frame, distortion, flag_curvature,
                                  flag_spectrum, g_ricci, landsberg,
                                  measure_frame, s_curvature,
                                  scalar_curvature, tau_derivatives,
                                  weighted_ricci)
from finslerlab.errors import DegenerateFlag, NValueInvalid
from finslerlab.jets import PointTangent

from . import oracles
from .conftest import (CATALOG_2D, const_riemann, euclidean, funk, hyperbolic,
                       interior_points, minkowski, randers, sphere)

RIC_N_SENTINEL = -math.inf


def test_chern_riemann_flat_families():
    for spec in (euclidean(2), minkowski(2), const_riemann(2)):
        p = interior_points(spec, 1, seed=3)[0]
        assert np.max(np.abs(chern_riemann(spec, p))) <= 1e-12


def test_chern_riemann_matches_riemannian_oracle():
    for base, spec in (("sphere-stereographic", sphere(2)),
                       ("hyperbolic-poincare", hyperbolic(2))):
        for p in interior_points(spec, 5, seed=5):
            R4 = chern_riemann(spec, p)
            R4_oracle = oracles.riemann_tensor(base, 1.0, p.x)
            scale = max(np.max(np.abs(R4_oracle)), 1e-30)
            assert np.max(np.abs(R4 - R4_oracle)) / scale <= 1e-5


def test_chern_p_vanishes_on_berwald():
    for spec in (sphere(2), minkowski(2), const_riemann(2)):
        p = interior_points(spec, 1, seed=7)[0]
        assert np.max(np.abs(chern_P(spec, p))) <= 1e-12


def test_p_trace_identity_randers():
    # P_i^i_kl + tau_{|k;l} = 0 with the I-based independent right side
    from finslerlab.engine import metric_functions
    from finslerlab.tensors import horizontal_derivative_field
    spec = randers(2)
    fns = metric_functions(spec)

    def mean_cartan_field(x, y):
        return fns.bundle(x, y)[4]

    for p in interior_points(spec, 3, seed=11):
        P4 = chern_P(spec, p)
        _, g, ginv, C, I, G, N, Gamma = fns.bundle(p.x, p.y)
        L, _ = landsberg(spec, p)
        covI = horizontal_derivative_field(spec, mean_cartan_field, "d")(p.x, p.y)
        tau_vh = covI.T - np.einsum("t,tks->ks", I, L)
        assert np.max(np.abs(np.einsum("iikl->kl", P4) + tau_vh)) <= 1e-5


def test_landsberg_riemannian_zero():
    spec = sphere(2)
    p = interior_points(spec, 1, seed=13)[0]
    L, J = landsberg(spec, p)
    assert np.max(np.abs(L)) <= 1e-12 and np.max(np.abs(J)) <= 1e-12


def test_landsberg_y_contraction_vanishes():
    spec = randers(2)
    p = interior_points(spec, 1, seed=17)[0]
    L, _ = landsberg(spec, p)
    assert np.max(np.abs(np.einsum("ijk,j->ik", L, p.y))) <= 1e-8


def test_flag_curvature_euclidean_zero():
    spec = euclidean(2)
    p = PointTangent(np.array([0.3, 0.1]), np.array([0.8, 0.6]))
    fr = curvature_frame(spec, p)
    assert flag_curvature(fr, fr.g, np.array([1.0, -2.0])) == pytest.approx(0.0, abs=1e-12)


def test_flag_curvature_unit_sphere_constant_one(rng):
    spec = sphere(2)
    for p in interior_points(spec, 10, seed=19):
        fr = curvature_frame(spec, p)
        v = rng.standard_normal(2)
        assert flag_curvature(fr, fr.g, v) == pytest.approx(1.0, abs=1e-5)


def test_flag_curvature_funk_constant():
    spec = funk(2)
    rng = np.random.default_rng(23)
    for p in interior_points(spec, 10, seed=23):
        fr = curvature_frame(spec, p)
        v = rng.standard_normal(2)
        assert flag_curvature(fr, fr.g, v) == pytest.approx(-0.25, abs=1e-4)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(min_value=-3, max_value=3), b=st.floats(min_value=-3, max_value=3),
       seed=st.integers(min_value=0, max_value=100))
def test_flag_invariance_under_reparametrization(a, b, seed):
    if abs(a) < 1e-3:
        a = 1.0
    spec = CATALOG_2D["randers"]
    p = interior_points(spec, 1, seed=seed)[0]
    fr = curvature_frame(spec, p)
    rng = np.random.default_rng(seed + 1)
    v = rng.standard_normal(2)
    gy = fr.g @ p.y
    if abs(float(v @ gy)) > 0.999 * np.linalg.norm(v) * np.linalg.norm(gy):
        v = v + np.array([0.7, -0.3])
    k1 = flag_curvature(fr, fr.g, v)
    k2 = flag_curvature(fr, fr.g, a * v + b * p.y)
    assert k2 == pytest.approx(k1, abs=1e-9 * max(1.0, abs(k1)))


def test_flag_degenerate():
    spec = euclidean(2)
    p = PointTangent(np.zeros(2), np.array([1.0, 0.0]))
    fr = curvature_frame(spec, p)
    with pytest.raises(DegenerateFlag):
        flag_curvature(fr, fr.g, 2.5 * p.y)


def test_ricci_and_scalar_examples():
    p = PointTangent(np.array([0.2, -0.1]), np.array([0.9, 0.5]))
    fr = curvature_frame(euclidean(2), p)
    assert fr.ric == pytest.approx(0.0, abs=1e-12)
    assert fr.scalarR == pytest.approx(0.0, abs=1e-12)

    spec = sphere(2)
    for p in interior_points(spec, 5, seed=29):
        fr = curvature_frame(spec, p)
        assert fr.ric == pytest.approx(fr.F**2, rel=1e-8)
        assert fr.scalarR == pytest.approx(2.0, rel=1e-8)

    spec = funk(2)
    for p in interior_points(spec, 5, seed=31):
        fr = curvature_frame(spec, p)
        assert fr.scalarR == pytest.approx(-0.5, abs=1e-3)


def test_ricci_trace_consistency_and_antisymmetry():
    for name, spec in CATALOG_2D.items():
        for p in interior_points(spec, 5, seed=37):
            fr = curvature_frame(spec, p)
            two_way = float(np.einsum("jk,jk->", fr.g_inv, fr.flag_low))
            assert abs(fr.ric - two_way) <= 1e-8 * max(1.0, abs(fr.ric))
            assert np.max(np.abs(fr.R4 + np.swapaxes(fr.R4, 2, 3))) <= 1e-7
            barR, tildeR = g_ricci(fr, fr.g, fr.g_inv)
            assert float(p.y @ barR @ p.y) == pytest.approx(fr.ric, rel=1e-8, abs=1e-10)
            assert float(p.y @ tildeR @ p.y) == pytest.approx(fr.ric, rel=1e-8, abs=1e-10)
            assert scalar_curvature(fr, fr.g_inv) == pytest.approx(
                float(np.einsum("ij,ij->", fr.g_inv, fr.tildeRic)), rel=1e-9, abs=1e-12)


def test_bh_density_catalog():
    assert bh_density(euclidean(2), np.zeros(2)) == pytest.approx(1.0, abs=1e-12)
    spec = sphere(2)
    x = np.array([0.4, -0.3])
    a = oracles.conformal_metric("sphere-stereographic", 1.0, x)
    assert bh_density(spec, x) == pytest.approx(np.sqrt(np.linalg.det(a)), rel=1e-6)
    # Randers unit ball: sigma_B = (1 - |b|^2)^{(n+1)/2}
    spec = minkowski(2, 0.5)
    want = oracles.randers_bh_density(np.eye(2), np.array([0.5, 0.0]))
    assert want == pytest.approx(0.75**1.5, abs=1e-15)
    assert bh_density(spec, np.zeros(2)) == pytest.approx(want, abs=1e-4)


def test_distortion_catalog():
    spec = euclidean(2)
    p = interior_points(spec, 1, seed=41)[0]
    assert distortion(spec, BH_MEASURE, p) == pytest.approx(0.0, abs=1e-10)

    spec = sphere(2)
    for p in interior_points(spec, 3, seed=43):
        assert distortion(spec, BH_MEASURE, p) == pytest.approx(0.0, abs=1e-6)

    spec = euclidean(2)
    p = PointTangent(np.array([1.2, -0.4]), np.array([0.3, 1.0]))
    assert distortion(spec, GAUSSIAN_MEASURE, p) == pytest.approx(
        float(p.x @ p.x) / 4.0, abs=1e-12)
    grad, hess = tau_derivatives(spec, GAUSSIAN_MEASURE, p)
    assert np.allclose(grad, p.x / 2.0, atol=1e-9)
    assert np.max(np.abs(hess - 0.5 * np.eye(2))) <= 1e-5


def test_s_curvature_catalog():
    for spec in (sphere(2), const_riemann(2), minkowski(2)):
        p = interior_points(spec, 1, seed=47)[0]
        S, _ = s_curvature(spec, BH_MEASURE, p)
        assert abs(S) <= 1e-6

    for n in (2, 3):
        spec = funk(n)
        for p in interior_points(spec, 3, seed=53, radius_frac=0.4):
            S, _ = s_curvature(spec, BH_MEASURE, p)
            from finslerlab.engine import metric_functions
            F = metric_functions(spec).f(p.x, p.y)
            assert S == pytest.approx((n + 1) / 2.0 * F, abs=1e-3)

    spec = euclidean(2)
    p = PointTangent(np.array([2.0, 0.0]), np.array([1.0, 0.0]))
    S, Sdot = s_curvature(spec, GAUSSIAN_MEASURE, p)
    assert S == pytest.approx(1.0, abs=1e-5)
    # consistency with the contraction route tau_{|m} y^m
    grad, _ = tau_derivatives(spec, GAUSSIAN_MEASURE, p)
    assert S == pytest.approx(float(grad @ p.y), abs=1e-5)


def test_weighted_ricci():
    spec = euclidean(2)
    p = interior_points(spec, 1, seed=59)[0]
    mf = measure_frame(spec, BH_MEASURE, p)
    fr = curvature_frame(spec, p)
    assert weighted_ricci(fr, mf, math.inf) == pytest.approx(0.0, abs=1e-8)
    assert mf.ricN[math.inf] == pytest.approx(0.0, abs=1e-8)

    spec = sphere(2)
    p = interior_points(spec, 1, seed=61)[0]
    mf = measure_frame(spec, BH_MEASURE, p)
    fr = curvature_frame(spec, p)
    assert weighted_ricci(fr, mf, math.inf) == pytest.approx(fr.ric, abs=1e-5)
    assert mf.ricN[2] == pytest.approx(fr.ric, abs=1e-5)  # S = 0: Ric^n defined

    spec = euclidean(2)
    p = PointTangent(np.array([1.0, 1.0]), np.array([0.6, -0.2]))
    mf = measure_frame(spec, GAUSSIAN_MEASURE, p)
    fr = curvature_frame(spec, p)
    assert weighted_ricci(fr, mf, math.inf) == pytest.approx(0.5 * mf.F**2, abs=1e-4)
    assert mf.ricN[2] == RIC_N_SENTINEL  # S != 0 flags the dimensional bound
    with pytest.raises(NValueInvalid):
        weighted_ricci(fr, mf, 1.5)


def test_homogeneity_grades():
    """y -> 2y rescaling: g(0), C(-1), G(2), N(1), Gamma(0), R4(0),
    flag_low(2), Ric(2), S(1), tau(0)."""
    from finslerlab.engine import metric_functions
    spec = randers(2)
    p = interior_points(spec, 1, seed=67)[0]
    p2 = PointTangent(p.x, 2.0 * p.y)
    fns = metric_functions(spec)
    b1 = fns.bundle(p.x, p.y)
    b2 = fns.bundle(p2.x, p2.y)
    grades = {1: 0, 3: -1, 5: 2, 6: 1, 7: 0}  # bundle slots: g, C, G, N, Gamma
    for slot, k in grades.items():
        lhs = np.asarray(b2[slot])
        rhs = 2.0**k * np.asarray(b1[slot])
        assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(1.0, np.max(np.abs(rhs)))
    f1, f2 = curvature_frame(spec, p), curvature_frame(spec, p2)
    assert np.max(np.abs(f2.R4 - f1.R4)) <= 1e-9 * max(1.0, np.max(np.abs(f1.R4)))
    assert np.max(np.abs(f2.flag_low - 4.0 * f1.flag_low)) <= 1e-9 * max(
        1.0, np.max(np.abs(f1.flag_low)))
    assert f2.ric == pytest.approx(4.0 * f1.ric, rel=1e-9, abs=1e-12)

    S1, _ = s_curvature(spec, BH_MEASURE, p)
    S2, _ = s_curvature(spec, BH_MEASURE, p2)
    assert S2 == pytest.approx(2.0 * S1, abs=1e-6 * max(1.0, abs(S1)))
    t1 = distortion(spec, BH_MEASURE, p)
    t2 = distortion(spec, BH_MEASURE, p2)
    assert t2 == pytest.approx(t1, abs=1e-11)


def test_flag_spectrum_shape():
    spec = funk(3)
    p = interior_points(spec, 1, seed=71)[0]
    fr = curvature_frame(spec, p)
    ev = flag_spectrum(fr)
    assert ev.shape == (2,)
    assert np.allclose(ev, -0.25, atol=1e-4)
