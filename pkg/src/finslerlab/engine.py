"""Exact derivative engine: per-metric compiled tensor evaluators.

All pointwise fields (fundamental tensor through Chern curvatures and the
distortion) come out of forward-mode jet propagation through the catalog's
closed-form F^2, so they are exact to rounding.  Horizontal derivatives of
*derived* fields are deliberately not taken here; those go through the
tensor-level finite-difference combinators in :mod:`finslerlab.tensors`, which keeps
the total jet order bounded.

Compiled callables are cached per (spec, measure).  Everything is pure and
deterministic; evaluation is safe to parallelize across points.
"""
from __future__ import annotations

import math
import os
import numpy as np

import jax

jax.config.update("jax_enable_x64", True)
jax.config.update("jax_platform_name", "cpu")
_cache_dir = os.environ.get(
    "FINSLERLAB_JAX_CACHE",
    os.path.join(os.path.expanduser("~"), ".cache", "finslerlab-jax"),
)
if _cache_dir and _cache_dir != "0":
    try:
        os.makedirs(_cache_dir, exist_ok=True)
        jax.config.update("jax_compilation_cache_dir", _cache_dir)
        jax.config.update("jax_persistent_cache_min_compile_time_secs", 0.25)
    except Exception:  # cache is an optimization only
        pass

import jax.numpy as jnp
from jax import jacfwd

from . import algebra
from .catalog import MeasureSpec, MetricSpec, f2_value, log_density
from .errors import QuadratureUnderflow

_CACHE: dict = {}


def clear_cache():
    _CACHE.clear()


def _cached(key, builder):
    if key not in _CACHE:
        _CACHE[key] = builder()
    return _CACHE[key]


def f2_jax(spec: MetricSpec):
    def f2(x, y):
        return f2_value(spec, x, y, xp=jnp)
    return f2


# -- jet tables ---------------------------------------------------------------

def _derivative_chain(f2, a, b):
    fn = f2
    for _ in range(b):
        fn = jacfwd(fn, argnums=1)
    for _ in range(a):
        fn = jacfwd(fn, argnums=0)
    # jacfwd appends new axes last: [y-axes..., x-axes...]; reorder to x-first
    perm = tuple(range(b, b + a)) + tuple(range(0, b))

    def entry(x, y):
        t = fn(x, y)
        if a and b:
            t = jnp.transpose(t, perm)
        return t
    return entry


def jet_pairs(order_x: int, order_y: int):
    return tuple((a, b) for a in range(order_x + 1) for b in range(order_y + 1))


def jet_table_fn(spec: MetricSpec, order_x: int, order_y: int):
    """Compiled (x, y) -> {(a, b): D^a_x D^b_y F^2} for the full order rectangle."""
    key = (spec, "jet", order_x, order_y)

    def build():
        f2 = f2_jax(spec)
        pairs = jet_pairs(order_x, order_y)
        entries = [_derivative_chain(f2, a, b) for (a, b) in pairs]

        @jax.jit
        def table(x, y):
            return tuple(e(x, y) for e in entries)

        def call(x, y):
            vals = table(jnp.asarray(x, jnp.float64), jnp.asarray(y, jnp.float64))
            return {p: np.asarray(v) for p, v in zip(pairs, vals)}
        return call
    return _cached(key, build)


# -- pointwise tensor stack ---------------------------------------------------

def _traced_parts(spec: MetricSpec):
    """Traceable builders for the pointwise stack, shared by all bundles."""
    f2 = f2_jax(spec)

    def jet(x, y, need):
        out = {}
        for (a, b) in need:
            out[(a, b)] = _derivative_chain(f2, a, b)(x, y)
        return out

    def g_fn(x, y):
        return 0.5 * jax.hessian(f2, argnums=1)(x, y)

    def spray_fn(x, y):
        t = jet(x, y, [(0, 2), (1, 0), (1, 1)])
        g = algebra.fundamental(t, jnp)
        return algebra.spray(t, jnp.linalg.inv(g), y, jnp)

    def N_fn(x, y):
        return jacfwd(spray_fn, argnums=1)(x, y)

    def gamma_fn(x, y):
        t = jet(x, y, [(0, 2), (0, 3), (1, 2)])
        g = algebra.fundamental(t, jnp)
        return algebra.chern_gamma(t, jnp.linalg.inv(g), N_fn(x, y), jnp)

    return f2, jet, g_fn, spray_fn, N_fn, gamma_fn


class MetricFunctions:
    """Compiled pointwise evaluators for one metric spec."""

    def __init__(self, spec: MetricSpec):
        self.spec = spec
        f2, jet, g_fn, spray_fn, N_fn, gamma_fn = _traced_parts(spec)

        @jax.jit
        def bundle(x, y):
            t = jet(x, y, [(0, 2), (0, 3), (1, 0), (1, 1), (1, 2)])
            g = algebra.fundamental(t, jnp)
            ginv = jnp.linalg.inv(g)
            C = algebra.cartan(t, jnp)
            I = algebra.mean_cartan(C, ginv, jnp)
            G = algebra.spray(t, ginv, y, jnp)
            N = N_fn(x, y)
            Gamma = algebra.chern_gamma(t, ginv, N, jnp)
            return f2(x, y), g, ginv, C, I, G, N, Gamma

        @jax.jit
        def rhs(x, y):
            return y, -2.0 * spray_fn(x, y)

        n = spec.dimension

        @jax.jit
        def rhs_state(z):
            x, y = z[:n], z[n:]
            return jnp.concatenate([y, -2.0 * spray_fn(x, y)])

        self._bundle = bundle
        self._rhs = rhs
        self._rhs_state = rhs_state

    def f2(self, x, y) -> float:
        return float(f2_value(self.spec, np.asarray(x, float), np.asarray(y, float)))

    def f(self, x, y) -> float:
        return math.sqrt(self.f2(x, y))

    def bundle(self, x, y):
        out = self._bundle(jnp.asarray(x, jnp.float64), jnp.asarray(y, jnp.float64))
        return tuple(np.asarray(v) for v in out)

    def g(self, x, y):
        return self.bundle(x, y)[1]

    def ginv(self, x, y):
        return self.bundle(x, y)[2]

    def gamma(self, x, y):
        return self.bundle(x, y)[7]

    def nonlinear(self, x, y):
        return self.bundle(x, y)[6]

    def spray(self, x, y):
        return self.bundle(x, y)[5]

    def geodesic_rhs(self, x, y):
        dx, dy = self._rhs(jnp.asarray(x, jnp.float64), jnp.asarray(y, jnp.float64))
        return np.asarray(dx), np.asarray(dy)

    def geodesic_rhs_state(self, z):
        return np.asarray(self._rhs_state(jnp.asarray(z, jnp.float64)))


class CurvatureFunctions:
    """Compiled Chern curvature evaluators (R4, P4, L) for one metric spec."""

    def __init__(self, spec: MetricSpec):
        self.spec = spec
        f2, jet, g_fn, spray_fn, N_fn, gamma_fn = _traced_parts(spec)

        @jax.jit
        def bundle(x, y):
            N = N_fn(x, y)
            gamma = gamma_fn(x, y)
            dGdx = jacfwd(gamma_fn, argnums=0)(x, y)
            dGdy = jacfwd(gamma_fn, argnums=1)(x, y)
            R4 = algebra.chern_riemann_from_parts(gamma, dGdx, dGdy, N, jnp)
            P4 = algebra.chern_p_from_parts(dGdy, jnp)
            d2G = jacfwd(N_fn, argnums=1)(x, y)
            L = algebra.landsberg_from_parts(d2G, gamma, jnp)
            return R4, P4, L

        self._bundle = bundle

    def bundle(self, x, y):
        out = self._bundle(jnp.asarray(x, jnp.float64), jnp.asarray(y, jnp.float64))
        return tuple(np.asarray(v) for v in out)


# -- measures -----------------------------------------------------------------

def ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sphere_quadrature(n: int, budget: int = 0):
    """Direction nodes U (m, n) and weights w (sum w = |S^{n-1}|).

    Trapezoid rule on the circle, Gauss-Legendre x trapezoid products on
    higher spheres; all spectrally accurate for smooth integrands.
    """
    if n == 2:
        m = budget or 2048
        th = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
        U = np.stack([np.cos(th), np.sin(th)], axis=1)
        w = np.full(m, 2.0 * np.pi / m)
        return U, w
    if n == 3:
        mz = max(16, int(np.sqrt((budget or 10000) / 2)))
        mp = 2 * mz
        z, wz = np.polynomial.legendre.leggauss(mz)
        phi = np.linspace(0.0, 2.0 * np.pi, mp, endpoint=False)
        s = np.sqrt(1.0 - z**2)
        U = np.stack([
            np.outer(s, np.cos(phi)).ravel(),
            np.outer(s, np.sin(phi)).ravel(),
            np.repeat(z, mp),
        ], axis=1)
        w = np.repeat(wz, mp) * (2.0 * np.pi / mp)
        return U, w
    if n == 4:
        mc = max(12, int(round(((budget or 16000) / 4) ** (1.0 / 3.0))))
        mz, mp = mc, 2 * mc
        # chi in (0, pi) with weight sin^2(chi): Gauss-Legendre on chi
        cnode, cw = np.polynomial.legendre.leggauss(mc)
        chi = 0.5 * np.pi * (cnode + 1.0)
        wchi = 0.5 * np.pi * cw * np.sin(chi) ** 2
        z, wz = np.polynomial.legendre.leggauss(mz)
        phi = np.linspace(0.0, 2.0 * np.pi, mp, endpoint=False)
        sz = np.sqrt(1.0 - z**2)
        sc = np.sin(chi)
        U = np.stack([
            np.einsum("c,z,p->czp", sc, sz, np.cos(phi)).ravel(),
            np.einsum("c,z,p->czp", sc, sz, np.sin(phi)).ravel(),
            np.einsum("c,z,p->czp", sc, z, np.ones(mp)).ravel(),
            np.einsum("c,z,p->czp", np.cos(chi), np.ones(mz), np.ones(mp)).ravel(),
        ], axis=1)
        w = np.einsum("c,z,p->czp", wchi, wz,
                      np.full(mp, 2.0 * np.pi / mp)).ravel()
        return U, w
    raise QuadratureUnderflow(f"no sphere quadrature for n = {n}")


class MeasureFunctions:
    """Compiled density / distortion evaluators for (spec, measure)."""

    def __init__(self, spec: MetricSpec, measure: MeasureSpec):
        self.spec = spec
        self.measure = measure
        f2 = f2_jax(spec)

        if measure.kind == "explicit-density":
            def log_sigma(x):
                return log_density(measure, spec, x, xp=jnp)
        else:
            U, w = sphere_quadrature(spec.dimension, measure.quadrature)
            Uj = jnp.asarray(U)
            wj = jnp.asarray(w)
            vol_ball = ball_volume(spec.dimension)
            n_dim = spec.dimension

            def log_sigma(x):
                # Vol{F(x, .) < 1} = (1/n) int r(u)^n du with r(u) = 1/F(x, u)
                f2_dirs = jax.vmap(lambda u: f2(x, u))(Uj)
                body = jnp.sum(wj * f2_dirs ** (-0.5 * n_dim)) / n_dim
                return jnp.log(vol_ball) - jnp.log(body)

        def g_fn(x, y):
            return 0.5 * jax.hessian(f2, argnums=1)(x, y)

        @jax.jit
        def tau(x, y):
            g = g_fn(x, y)
            return 0.5 * jnp.log(jnp.linalg.det(g)) - log_sigma(x)

        self._tau = tau
        self._log_sigma = jax.jit(log_sigma)

    def sigma(self, x) -> float:
        v = float(np.exp(self._log_sigma(jnp.asarray(x, jnp.float64))))
        if not np.isfinite(v) or v <= 0.0:
            raise QuadratureUnderflow(f"sigma(x) = {v} at x = {np.asarray(x)}")
        return v

    def tau(self, x, y) -> float:
        return float(self._tau(jnp.asarray(x, jnp.float64), jnp.asarray(y, jnp.float64)))


def metric_functions(spec: MetricSpec) -> MetricFunctions:
    return _cached((spec, "metric"), lambda: MetricFunctions(spec))


def curvature_functions(spec: MetricSpec) -> CurvatureFunctions:
    return _cached((spec, "curv"), lambda: CurvatureFunctions(spec))


def measure_functions(spec: MetricSpec, measure: MeasureSpec) -> MeasureFunctions:
    return _cached((spec, measure, "measure"), lambda: MeasureFunctions(spec, measure))
