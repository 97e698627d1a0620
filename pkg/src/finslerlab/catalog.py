"""Closed catalog of Finsler metric families and measure choices.

Families (closed list, no user expression language):
  euclidean           F^2 = |y|^2
  riemannian          F^2 = a_ij(x) y^i y^j with a from a sub-catalog:
                        sphere-stereographic  a = 4/(1 + k|x|^2)^2 I   (curvature +k)
                        hyperbolic-poincare   a = 4/(1 - k|x|^2)^2 I   (curvature -k)
                        constant-matrix       a = M (SPD constant)
  randers             F = sqrt(a_ij(x) y^i y^j) + b_i y^i, constant b, ||b||_a < 1
  funk-ball           Funk metric of the unit ball (chart radius fixed at 1)
  minkowski-randers   F = sqrt(M y . y) + b . y, constant M and b

Measures: busemann-hausdorff (computed from the indicatrix) or explicit-density
sigma(x) = exp(q |x|^2 + l . x + c).

All specs are immutable after validation; every function here is pure.  The
closed-form evaluators take an ``xp`` array namespace so the same code runs
eagerly on numpy (any dtype, including longdouble) and traced under jax.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .configio import Tracked, load_tracked
from .errors import DegenerateDirection, OutOfChart, SpecInvalid

FAMILIES = ("euclidean", "riemannian", "randers", "funk-ball", "minkowski-randers")
RIEMANN_BASES = ("sphere-stereographic", "hyperbolic-poincare", "constant-matrix")

# families whose Chern connection is y-independent on the whole chart
BERWALD_FAMILIES = ("euclidean", "riemannian", "minkowski-randers")

# chart shrink factor for conformal charts, to stay clear of metric blow-up
CONFORMAL_GUARD = 0.9
POSITIVITY_FLOOR = 1e-8


@dataclass(frozen=True)
class Chart:
    kind: str = "ball"          # "ball" | "box"
    radius: float = 10.0        # ball radius or box half-width

    def contains(self, x, fraction=1.0) -> bool:
        x = np.asarray(x, dtype=float)
        r = self.radius * fraction
        if self.kind == "ball":
            return float(np.dot(x, x)) < r * r
        return bool(np.all(np.abs(x) < r))


@dataclass(frozen=True)
class MetricSpec:
    dimension: int
    family: str
    chart: Chart = Chart()
    base: str = ""                 # riemannian sub-catalog entry (riemannian / randers)
    curvature: float = 1.0         # conformal curvature magnitude k > 0
    matrix: tuple = ()             # flattened row-major SPD matrix
    b: tuple = ()                  # drift covector for randers families

    # -- parameter access -------------------------------------------------

    def matrix_array(self):
        n = self.dimension
        if not self.matrix:
            return np.eye(n)
        return np.asarray(self.matrix, dtype=float).reshape(n, n)

    def b_array(self):
        if not self.b:
            return np.zeros(self.dimension)
        return np.asarray(self.b, dtype=float)

    def domain_fraction(self) -> float:
        if self.family == "funk-ball":
            return 1.0 - 1e-9
        if self.base in ("sphere-stereographic", "hyperbolic-poincare"):
            return CONFORMAL_GUARD
        return 1.0

    def in_domain(self, x) -> bool:
        return self.chart.contains(x, self.domain_fraction())

    def require_in_domain(self, x):
        if not self.in_domain(x):
            raise OutOfChart(f"x = {np.asarray(x)} outside chart of {self.family}")

    def is_berwald(self) -> bool:
        return self.family in BERWALD_FAMILIES

    def label(self) -> str:
        tag = self.family if not self.base else f"{self.family}/{self.base}"
        return f"{tag} n={self.dimension}"


@dataclass(frozen=True)
class MeasureSpec:
    kind: str = "busemann-hausdorff"   # | "explicit-density"
    log_quad: float = 0.0              # sigma = exp(q |x|^2 + l . x + c)
    log_lin: tuple = ()
    log_const: float = 0.0
    quadrature: int = 0                # BH direction budget; 0 = default by dimension

    def log_lin_array(self, n):
        if not self.log_lin:
            return np.zeros(n)
        return np.asarray(self.log_lin, dtype=float)


GAUSSIAN_MEASURE = MeasureSpec(kind="explicit-density", log_quad=-0.25)
BH_MEASURE = MeasureSpec(kind="busemann-hausdorff")


# -- closed-form evaluators ------------------------------------------------

def conformal_factor(spec: MetricSpec, x, xp):
    """lambda(x) with a_ij = lambda^2 delta_ij for the conformal bases."""
    r2 = xp.sum(x * x, axis=-1)
    if spec.base == "sphere-stereographic":
        return 2.0 / (1.0 + spec.curvature * r2)
    if spec.base == "hyperbolic-poincare":
        return 2.0 / (1.0 - spec.curvature * r2)
    raise SpecInvalid(f"base {spec.base!r} is not conformal")


def riemann_quadratic(spec: MetricSpec, x, y, xp):
    """a_ij(x) y^i y^j for the riemannian sub-catalog."""
    if spec.base == "constant-matrix":
        M = xp.asarray(spec.matrix_array())
        return xp.einsum("...i,ij,...j->...", y, M, y)
    lam = conformal_factor(spec, x, xp)
    return lam * lam * xp.sum(y * y, axis=-1)


def f2_value(spec: MetricSpec, x, y, xp=np):
    """F^2(x, y); xp-generic and batch-safe over leading axes."""
    fam = spec.family
    if fam == "euclidean":
        return xp.sum(y * y, axis=-1)
    if fam == "riemannian":
        return riemann_quadratic(spec, x, y, xp)
    if fam == "randers":
        alpha = xp.sqrt(riemann_quadratic(spec, x, y, xp))
        beta = xp.einsum("...i,i->...", y, xp.asarray(spec.b_array()))
        return (alpha + beta) ** 2
    if fam == "minkowski-randers":
        M = xp.asarray(spec.matrix_array())
        alpha = xp.sqrt(xp.einsum("...i,ij,...j->...", y, M, y))
        beta = xp.einsum("...i,i->...", y, xp.asarray(spec.b_array()))
        return (alpha + beta) ** 2
    if fam == "funk-ball":
        xx = xp.sum(x * x, axis=-1)
        xy = xp.sum(x * y, axis=-1)
        yy = xp.sum(y * y, axis=-1)
        alpha = xp.sqrt(xy * xy + yy * (1.0 - xx))
        return ((alpha + xy) / (1.0 - xx)) ** 2
    raise SpecInvalid(f"unknown family {fam!r}")


def log_density(measure: MeasureSpec, spec: MetricSpec, x, xp=np):
    """log sigma(x) for explicit-density measures."""
    lin = xp.asarray(measure.log_lin_array(spec.dimension))
    return (measure.log_quad * xp.sum(x * x, axis=-1)
            + xp.einsum("...i,i->...", x, lin) + measure.log_const)


# -- public metric operations ----------------------------------------------

def f_value(spec: MetricSpec, p) -> float:
    """F(x, y).  Raises OutOfChart / DegenerateDirection."""
    x = np.asarray(p.x, dtype=float)
    y = np.asarray(p.y, dtype=float)
    spec.require_in_domain(x)
    if not np.all(np.isfinite(y)) or float(np.dot(y, y)) == 0.0:
        raise DegenerateDirection("y must be nonzero")
    f = float(np.sqrt(f2_value(spec, x, y)))
    if not np.isfinite(f) or f < POSITIVITY_FLOOR:
        raise DegenerateDirection(f"F(x, y) = {f:.3e} below positivity floor")
    return f


def reversibility(spec: MetricSpec, x, samples: int = 4096) -> float:
    """rho_x = max over sampled unit directions of F(x, -y) / F(x, y)."""
    x = np.asarray(x, dtype=float)
    spec.require_in_domain(x)
    dirs = sample_directions(spec.dimension, samples)
    fwd = np.array([np.sqrt(f2_value(spec, x, u)) for u in dirs])
    bwd = np.array([np.sqrt(f2_value(spec, x, -u)) for u in dirs])
    return float(np.max(bwd / fwd))


def sample_directions(n: int, count: int) -> np.ndarray:
    """Deterministic covering of the unit sphere (uniform circle for n = 2,
    seeded low-discrepancy-ish sample otherwise)."""
    if n == 2:
        th = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    rng = np.random.default_rng(1234567)
    u = rng.standard_normal((count, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    min_eigenvalue: float
    max_b_norm: float
    samples: int
    message: str = ""


def validate_spec(spec: MetricSpec, samples: int = 200) -> ValidationReport:
    """Strong-convexity / drift-norm validation on a sampled sub-bundle.

    Raises SpecInvalid on the first violated constraint; returns the sampled
    minimum eigenvalue of g otherwise.
    """
    if samples < 1:
        raise SpecInvalid("samples must be >= 1", field="samples")
    _check_static(spec)
    rng = np.random.default_rng(20240901)
    n = spec.dimension

    max_bnorm = 0.0
    if spec.family in ("randers", "minkowski-randers"):
        xs = _grid_points(spec, rng, samples)
        for x in xs:
            a_inv = _a_inverse(spec, x)
            b = spec.b_array()
            bn = float(np.sqrt(b @ a_inv @ b))
            max_bnorm = max(max_bnorm, bn)
            if bn >= 1.0:
                raise SpecInvalid(
                    f"||b||_a = {bn:.6f} >= 1 at x = {x}; positivity and strong "
                    "convexity fail", field="params.b")

    from .engine import metric_functions   # local import: engine depends on catalog
    fns = metric_functions(spec)
    min_eig = np.inf
    xs = _grid_points(spec, rng, samples)
    for x in xs:
        y = rng.standard_normal(n)
        y /= np.linalg.norm(y)
        g = np.asarray(fns.g(x, y))
        w = np.linalg.eigvalsh(g)
        min_eig = min(min_eig, float(w[0]))
    if min_eig <= 0.0:
        raise SpecInvalid(
            f"fundamental tensor not positive definite (min eigenvalue {min_eig:.3e})")
    return ValidationReport(True, min_eig, max_bnorm, samples)


def _check_static(spec: MetricSpec):
    n = spec.dimension
    if n < 2:
        raise SpecInvalid("dimension must be >= 2", field="dimension")
    if spec.family not in FAMILIES:
        raise SpecInvalid(f"family must be one of {FAMILIES}", field="family")
    if spec.family in ("riemannian", "randers"):
        if spec.base not in RIEMANN_BASES:
            raise SpecInvalid(f"base must be one of {RIEMANN_BASES}", field="params.base")
        if spec.base != "constant-matrix" and spec.curvature <= 0:
            raise SpecInvalid("curvature parameter must be > 0", field="params.curvature")
    if spec.family == "funk-ball":
        if spec.chart.kind != "ball" or abs(spec.chart.radius - 1.0) > 1e-12:
            raise SpecInvalid("funk-ball requires chart = ball of radius 1", field="chart.radius")
    if spec.base == "hyperbolic-poincare":
        lim = 1.0 / np.sqrt(spec.curvature)
        if spec.chart.radius > lim + 1e-12:
            raise SpecInvalid(
                f"hyperbolic chart radius {spec.chart.radius} exceeds 1/sqrt(k) = {lim:.6f}",
                field="chart.radius")
    if spec.matrix:
        M = spec.matrix_array()
        if not np.allclose(M, M.T):
            raise SpecInvalid("matrix parameter must be symmetric", field="params.matrix")
        if np.linalg.eigvalsh(M)[0] <= 0:
            raise SpecInvalid("matrix parameter must be positive definite", field="params.matrix")
    if spec.b and len(spec.b) != n:
        raise SpecInvalid("b must have length = dimension", field="params.b")


def _a_inverse(spec: MetricSpec, x):
    if spec.family == "minkowski-randers" or spec.base == "constant-matrix":
        return np.linalg.inv(spec.matrix_array())
    lam = conformal_factor(spec, np.asarray(x, dtype=float), np)
    return np.eye(spec.dimension) / lam**2


def _grid_points(spec: MetricSpec, rng, count: int) -> np.ndarray:
    """Sample chart points covering the usable domain (ball sampling)."""
    n = spec.dimension
    frac = 0.95 * spec.domain_fraction()
    r = spec.chart.radius * frac
    u = rng.standard_normal((count, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    radii = r * rng.uniform(0.0, 1.0, count) ** (1.0 / n)
    return u * radii[:, None]


def validate_measure(measure: MeasureSpec, spec: MetricSpec):
    if measure.kind not in ("busemann-hausdorff", "explicit-density"):
        raise SpecInvalid(
            "measure kind must be busemann-hausdorff or explicit-density",
            field="measure.kind")
    if measure.log_lin and len(measure.log_lin) != spec.dimension:
        raise SpecInvalid("log_lin must have length = dimension", field="measure.log_lin")
    # sigma = exp(...) is positive wherever finite; nothing else to check.


# -- spec file parsing -------------------------------------------------------

def _as_float_tuple(v, tracked, path):
    if not isinstance(v, (list, tuple)):
        tracked.fail(path, f"field '{path}' must be a list of numbers")
    try:
        return tuple(float(e) for e in v)
    except (TypeError, ValueError):
        tracked.fail(path, f"field '{path}' must contain numbers only")


def metric_from_tracked(doc: Tracked) -> tuple[MetricSpec, MeasureSpec]:
    n = doc.require("dimension")
    if not isinstance(n, int) or n < 2:
        doc.fail("dimension", "dimension must be an integer >= 2")
    family = doc.require("family")
    if family not in FAMILIES:
        doc.fail("family", f"family {family!r} not in catalog {FAMILIES}")

    params = doc.get("params", {}) or {}
    if not isinstance(params, dict):
        doc.fail("params", "params must be a mapping")

    chart_kind = doc.get("chart.kind", "ball")
    if chart_kind not in ("ball", "box"):
        doc.fail("chart.kind", "chart kind must be 'ball' or 'box'")
    chart_radius = doc.get("chart.radius", 1.0 if family == "funk-ball" else 10.0)
    try:
        chart_radius = float(chart_radius)
    except (TypeError, ValueError):
        doc.fail("chart.radius", "chart radius must be a number")
    if chart_radius <= 0:
        doc.fail("chart.radius", "chart radius must be > 0")

    matrix = ()
    if "matrix" in params:
        rows = params["matrix"]
        if not isinstance(rows, list) or len(rows) != n:
            doc.fail("params.matrix", f"matrix must be {n} rows of {n} numbers")
        flat = []
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n:
                doc.fail(f"params.matrix[{i}]", f"matrix row must have {n} entries")
            flat.extend(float(e) for e in row)
        matrix = tuple(flat)

    b = ()
    if "b" in params:
        b = _as_float_tuple(params["b"], doc, "params.b")
        if len(b) != n:
            doc.fail("params.b", f"b must have length {n}")

    spec = MetricSpec(
        dimension=n,
        family=family,
        chart=Chart(chart_kind, chart_radius),
        base=str(params.get("base", "")),
        curvature=float(params.get("curvature", 1.0)),
        matrix=matrix,
        b=b,
    )
    try:
        _check_static(spec)
    except SpecInvalid as exc:
        raise SpecInvalid(str(exc.args[0] if exc.args else exc),
                          field=exc.field, line=doc.line(exc.field or "")) from None

    mk = doc.get("measure.kind", "busemann-hausdorff")
    log_lin = ()
    if doc.get("measure.log_lin") is not None:
        log_lin = _as_float_tuple(doc.get("measure.log_lin"), doc, "measure.log_lin")
    measure = MeasureSpec(
        kind=str(mk),
        log_quad=float(doc.get("measure.log_quad", 0.0)),
        log_lin=log_lin,
        log_const=float(doc.get("measure.log_const", 0.0)),
        quadrature=int(doc.get("measure.quadrature", 0)),
    )
    try:
        validate_measure(measure, spec)
    except SpecInvalid as exc:
        raise SpecInvalid(str(exc.args[0] if exc.args else exc),
                          field=exc.field, line=doc.line(exc.field or "")) from None
    return spec, measure


def load_metric_spec(path) -> tuple[MetricSpec, MeasureSpec]:
    """Parse a metric spec file; SpecInvalid errors cite field and line."""
    return metric_from_tracked(load_tracked(path))
