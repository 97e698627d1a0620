import io
import math

import numpy as np
import pytest

from finslerlab.catalog import BH_MEASURE, GAUSSIAN_MEASURE
from finslerlab.engine import metric_functions
from finslerlab.geodesics import (backward_initial, forward_distance,
                                  frame_orthonormality_drift, grid_derivative,
                                  integrate_geodesic, parallel_frame,
                                  sample_along, seed_orthonormal_frame,
                                  write_path_csv)
from finslerlab.jets import PointTangent

from . import oracles
from .conftest import (CATALOG_2D, euclidean, funk, hyperbolic, interior_points,
                       minkowski, randers, sphere)


def test_euclidean_straight_line():
    path = integrate_geodesic(euclidean(2), PointTangent(np.zeros(2),
                                                         np.array([1.0, 0.0])), 3.0)
    assert np.allclose(path.x[-1], [3.0, 0.0], atol=1e-12)
    assert path.f_drift <= 1e-13


def test_unit_speed_conservation_all_families():
    for name, spec in CATALOG_2D.items():
        t_end = 10.0 if name in ("euclidean", "minkowski", "funk") else 1.8
        p = interior_points(spec, 1, seed=3, radius_frac=0.1)[0]
        path = integrate_geodesic(spec, p, t_end, tol=1e-7)
        assert path.f_drift <= 1e-7, name
        fns = metric_functions(spec)
        worst = max(abs(fns.f(path.x[k], path.y[k]) - 1.0) for k in range(len(path.t)))
        assert worst <= 1e-7, name


def test_funk_forward_rays_stay_inside():
    spec = funk(2)
    path = integrate_geodesic(spec, PointTangent(np.zeros(2), np.array([0.6, 0.8])), 10.0)
    r = np.linalg.norm(path.x[-1])
    assert not path.left_chart
    assert r < 1.0
    # radial law r(t) = 1 - exp(-t) for rays from the origin
    assert r == pytest.approx(1.0 - math.exp(-10.0), abs=1e-7)
    # straight ray: direction never turns
    d = path.x[-1] / r
    assert np.allclose(d, [0.6, 0.8], atol=1e-9)


def test_left_chart_reported():
    spec = sphere(2)  # usable radius 0.9 * 2.5
    path = integrate_geodesic(spec, PointTangent(np.array([2.0, 0.0]),
                                                 np.array([1.0, 0.0])), 5.0)
    assert path.left_chart and path.t_exit is not None
    assert np.linalg.norm(path.x[-1]) <= 2.25 + 1e-6


def test_backward_geodesic_retraces_reversible():
    spec = sphere(2)
    p = interior_points(spec, 1, seed=5, radius_frac=0.2)[0]
    fwd = integrate_geodesic(spec, p, 0.8)
    turn = PointTangent(fwd.x[-1], fwd.y[-1])
    bwd = integrate_geodesic(spec, backward_initial(spec, turn), 0.8)
    assert np.allclose(bwd.x[-1], p.x, atol=1e-7)


def test_parallel_frame_euclidean_constant():
    spec = euclidean(2)
    path = integrate_geodesic(spec, PointTangent(np.zeros(2), np.array([0.0, 1.0])), 2.0)
    frames = parallel_frame(spec, path)
    assert np.max(np.abs(frames - frames[0])) <= 1e-12
    assert np.allclose(frames[0][-1], path.y[0], atol=1e-14)  # E_n = velocity


def test_parallel_frame_sphere_vs_riemannian_oracle():
    spec = sphere(2)
    p = interior_points(spec, 1, seed=7, radius_frac=0.2)[0]
    path = integrate_geodesic(spec, p, 1.5)
    frames = parallel_frame(spec, path)
    v = oracles.transport_uniform("sphere-stereographic", 1.0,
                                  path.x, path.y, path.t, frames[0][0])
    assert np.max(np.abs(frames[:, 0, :] - v)) <= 1e-5
    assert frame_orthonormality_drift(spec, path) <= 1e-6


def test_parallel_frame_norm_preservation_randers():
    spec = randers(2)
    p = interior_points(spec, 1, seed=11, radius_frac=0.1)[0]
    path = integrate_geodesic(spec, p, 5.0)
    parallel_frame(spec, path)
    assert frame_orthonormality_drift(spec, path) <= 1e-6


def test_forward_distance_euclidean():
    d, path = forward_distance(euclidean(2), np.zeros(2), np.array([3.0, 4.0]))
    assert d == pytest.approx(5.0, abs=1e-6)
    assert np.allclose(path.x[-1], [3.0, 4.0], atol=1e-5)


def test_forward_distance_minkowski_norm_oracle():
    """Straight lines are the geodesics of a Minkowski norm, so the forward
    distance is the norm of the displacement: d(p, q) = F(q - p)."""
    spec = minkowski(2, 0.5)
    fns = metric_functions(spec)
    p, q = np.zeros(2), np.array([1.0, 0.0])
    d_pq, _ = forward_distance(spec, p, q)
    d_qp, _ = forward_distance(spec, q, p)
    assert d_pq == pytest.approx(fns.f(p, q - p), abs=1e-7)   # = 1.5
    assert d_qp == pytest.approx(fns.f(q, p - q), abs=1e-7)   # = 0.5
    # forward/backward ratio equals the direction's reversibility factor
    assert d_qp / d_pq == pytest.approx(fns.f(p, -q) / fns.f(p, q), rel=1e-6)


def test_forward_distance_sphere_great_circle():
    spec = sphere(2)
    pairs = [(np.array([0.0, 0.0]), np.array([0.5, 0.0])),
             (np.array([0.3, -0.2]), np.array([-0.4, 0.6]))]
    for p, q in pairs:
        d, _ = forward_distance(spec, p, q)
        assert d == pytest.approx(oracles.sphere_distance(1.0, p, q), abs=1e-4)


def test_forward_distance_hyperbolic_closed_form():
    spec = hyperbolic(2)
    p, q = np.array([0.1, 0.05]), np.array([-0.3, 0.4])
    d, _ = forward_distance(spec, p, q)
    assert d == pytest.approx(oracles.hyperbolic_distance(1.0, p, q), abs=1e-4)


def test_forward_distance_funk_radial():
    spec = funk(2)
    d, _ = forward_distance(spec, np.zeros(2), np.array([0.5, 0.0]))
    assert d == pytest.approx(-math.log(0.5), abs=1e-6)


def test_reversible_symmetry_and_triangle():
    spec = sphere(2)
    rng = np.random.default_rng(13)
    pts = [rng.uniform(-0.6, 0.6, 2) for _ in range(3)]
    d = {}
    for i in range(3):
        for j in range(3):
            if i != j:
                d[(i, j)], _ = forward_distance(spec, pts[i], pts[j])
    for i, j in ((0, 1), (1, 2), (0, 2)):
        assert d[(i, j)] == pytest.approx(d[(j, i)], abs=1e-5)
    for i, j, k in ((0, 1, 2), (2, 0, 1), (1, 2, 0)):
        assert d[(i, k)] <= d[(i, j)] + d[(j, k)] + 2e-5


def test_triangle_inequality_irreversible():
    spec = minkowski(2, 0.5)
    pts = [np.zeros(2), np.array([0.8, 0.3]), np.array([-0.2, 0.9])]
    d = {}
    for i in range(3):
        for j in range(3):
            if i != j:
                d[(i, j)], _ = forward_distance(spec, pts[i], pts[j])
    for i in range(3):
        for j in range(3):
            for k in range(3):
                if len({i, j, k}) == 3:
                    assert d[(i, k)] <= d[(i, j)] + d[(j, k)] + 2e-5


def test_sample_along_columns():
    spec = euclidean(2)
    path = integrate_geodesic(spec, PointTangent(np.zeros(2), np.array([1.0, 0.0])), 2.0)
    cols = sample_along(spec, BH_MEASURE, path, ["F", "S", "tau", "Ric"])
    assert np.allclose(cols["F"], 1.0, atol=1e-12)
    assert np.max(np.abs(cols["S"])) <= 1e-10
    assert np.max(np.abs(cols["tau"])) <= 1e-10
    assert np.max(np.abs(cols["Ric"])) <= 1e-12

    # Gaussian soliton, radial path: S(t) = t/2
    path = integrate_geodesic(spec, PointTangent(np.zeros(2), np.array([1.0, 0.0])), 4.0)
    cols = sample_along(spec, GAUSSIAN_MEASURE, path, ["S", "Sdot", "RicInf"])
    assert np.max(np.abs(cols["S"] - path.t / 2.0)) <= 1e-5
    assert np.max(np.abs(cols["Sdot"] - 0.5)) <= 1e-5
    assert np.max(np.abs(cols["RicInf"] - 0.5)) <= 1e-5

    spec = funk(2)
    p = interior_points(spec, 1, seed=17, radius_frac=0.2)[0]
    path = integrate_geodesic(spec, p, 1.5)
    cols = sample_along(spec, BH_MEASURE, path, ["Ric"])
    assert np.max(np.abs(cols["Ric"] + 0.25)) <= 1e-3


def test_grid_derivative_orders():
    t = np.linspace(0.0, 2.0, 41)
    v = np.sin(t)
    assert np.max(np.abs(grid_derivative(t, v, 1) - np.cos(t))) <= 1e-5
    d2 = grid_derivative(t, v, 2)
    assert np.max(np.abs(d2[2:-2] + np.sin(t)[2:-2])) <= 1e-6
    assert np.max(np.abs(d2 + np.sin(t))) <= 5e-3  # one-sided edges, 2nd order
    # exact on quadratics, including the edges
    q = 1.5 * t * t - 0.7 * t + 0.2
    assert np.max(np.abs(grid_derivative(t, q, 1) - (3.0 * t - 0.7))) <= 1e-11
    assert np.max(np.abs(grid_derivative(t, q, 2) - 3.0)) <= 1e-10


def test_path_csv_export(tmp_path):
    spec = euclidean(2)
    path = integrate_geodesic(spec, PointTangent(np.zeros(2), np.array([1.0, 0.0])),
                              1.0, samples=11)
    cols = sample_along(spec, BH_MEASURE, path, ["F"])
    buf = io.StringIO()
    write_path_csv(path, buf, cols)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "t,x1,x2,y1,y2,F"
    assert len(lines) == 12
    row = lines[-1].split(",")
    assert float(row[0]) == 1.0 and float(row[1]) == pytest.approx(1.0, abs=1e-12)


def test_forward_distance_no_convergence():
    from finslerlab.errors import NoConvergence
    spec = sphere(2)
    with pytest.raises(NoConvergence) as exc:
        # target ~1.1 away but the shooting horizon is capped far short of it
        forward_distance(spec, np.zeros(2), np.array([0.6, 0.0]), t_cap=0.3)
    assert exc.value.best_residual > 1e-5


def test_s_curvature_geodesic_leaves_chart():
    from finslerlab.catalog import BH_MEASURE
    from finslerlab.curvature import s_curvature
    from finslerlab.errors import GeodesicLeavesChart
    spec = sphere(2)  # usable radius 2.25
    p = PointTangent(np.array([2.24, 0.0]), np.array([1.0, 0.0]))
    with pytest.raises(GeodesicLeavesChart):
        s_curvature(spec, BH_MEASURE, p, h=0.05)


def test_seed_frame_orthonormal():
    spec = randers(2)
    p = interior_points(spec, 1, seed=19)[0]
    fns = metric_functions(spec)
    g = fns.g(p.x, p.y)
    E = seed_orthonormal_frame(g, p.y)
    gram = E @ g @ E.T
    assert np.max(np.abs(gram - np.eye(2))) <= 1e-12
    assert np.allclose(E[-1], p.y)
