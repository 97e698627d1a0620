import numpy as np
import pytest

from finslerlab.catalog import Chart, MetricSpec
from finslerlab.jets import PointTangent

SEED = 20240815


def euclidean(n=2, radius=50.0):
    return MetricSpec(dimension=n, family="euclidean", chart=Chart("ball", radius))


def sphere(n=2, curvature=1.0, radius=2.5):
    return MetricSpec(dimension=n, family="riemannian", base="sphere-stereographic",
                      curvature=curvature, chart=Chart("ball", radius))


def hyperbolic(n=2, curvature=1.0):
    return MetricSpec(dimension=n, family="riemannian", base="hyperbolic-poincare",
                      curvature=curvature, chart=Chart("ball", 1.0 / np.sqrt(curvature)))


def const_riemann(n=2):
    m = np.diag(1.0 + 0.5 * np.arange(n))
    return MetricSpec(dimension=n, family="riemannian", base="constant-matrix",
                      matrix=tuple(m.ravel()), chart=Chart("ball", 10.0))


def randers(n=2, b0=0.25):
    b = tuple([b0] + [0.1] * (n - 1))
    return MetricSpec(dimension=n, family="randers", base="sphere-stereographic",
                      curvature=1.0, b=b, chart=Chart("ball", 2.5))


def funk(n=2):
    return MetricSpec(dimension=n, family="funk-ball", chart=Chart("ball", 1.0))


def minkowski(n=2, b0=0.5):
    b = tuple([b0] + [0.0] * (n - 1))
    return MetricSpec(dimension=n, family="minkowski-randers", b=b,
                      chart=Chart("ball", 50.0))


CATALOG_2D = {
    "euclidean": euclidean(2),
    "sphere": sphere(2),
    "hyperbolic": hyperbolic(2),
    "randers": randers(2),
    "funk": funk(2),
    "minkowski": minkowski(2),
}


def interior_points(spec, count, seed=SEED, radius_frac=0.45, unit_f=True):
    """Deterministic interior sample points with unit-F (or unit-norm) y."""
    from finslerlab.engine import metric_functions

    rng = np.random.default_rng(seed)
    fns = metric_functions(spec)
    n = spec.dimension
    r = radius_frac * spec.chart.radius * spec.domain_fraction()
    pts = []
    for _ in range(count):
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        x = u * r * rng.uniform(0.05, 1.0) ** (1.0 / n)
        y = rng.standard_normal(n)
        y /= fns.f(x, y) if unit_f else np.linalg.norm(y)
        pts.append(PointTangent(x, y))
    return pts


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(SEED)
