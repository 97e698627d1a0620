"""Pointwise tensor stack and covariant-derivative combinators.

Fundamental/Cartan/spray evaluators work straight off a Jet table; connection
coefficients come from the compiled engine.  Horizontal derivatives of derived
fields use tensor-level central differences with one Richardson level (step
rule shared with the jet module), so the total jet order stays bounded while
any field, however deep, can still be differentiated.

A *field* is any callable (x, y) -> scalar or ndarray, evaluated on numpy
arrays.  Valence strings describe tensor slots: 'u' contravariant,
'd' covariant, e.g. the Chern-Riemann tensor R_j^i_kl has valence "dudd".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra, engine
from .catalog import MetricSpec
from .errors import NotPositiveDefinite, StencilLeavesChart
from .jets import Jet, PointTangent, check_point

FD_BASE_STEP = 1e-4


@dataclass
class TensorFrame:
    """All pointwise connection-level tensors at one (x, y)."""

    at: PointTangent
    F: float
    g: np.ndarray
    g_inv: np.ndarray
    C: np.ndarray
    I: np.ndarray
    G: np.ndarray
    N: np.ndarray
    Gamma: np.ndarray


def fundamental_tensor(jet: Jet):
    """g_ij = 1/2 d^2F^2/dy^i dy^j and its inverse; rejects non-SPD results."""
    g = algebra.fundamental(jet.tensor_table())
    w = np.linalg.eigvalsh(g)
    if w[0] <= 0.0:
        raise NotPositiveDefinite(
            f"min eigenvalue of g is {w[0]:.3e} at x={jet.center.x}, y={jet.center.y}")
    return g, np.linalg.inv(g)


def cartan_tensor(jet: Jet):
    """C_ijk = 1/4 d^3F^2/dy^i dy^j dy^k and the mean Cartan I_i = g^{jk} C_ijk."""
    table = jet.tensor_table()
    g = algebra.fundamental(table)
    C = algebra.cartan(table)
    return C, algebra.mean_cartan(C, np.linalg.inv(g))


def spray(jet: Jet, g_inv: np.ndarray) -> np.ndarray:
    """Spray coefficients G^i at the jet's base point."""
    return algebra.spray(jet.tensor_table(), g_inv, jet.center.y)


def nonlinear_connection(metric: MetricSpec, p: PointTangent) -> np.ndarray:
    """N^i_j = dG^i/dy^j, by jet propagation (never finite differences)."""
    check_point(metric, p)
    return engine.metric_functions(metric).nonlinear(p.x, p.y)


def chern_connection(metric: MetricSpec, p: PointTangent) -> np.ndarray:
    """Chern connection coefficients Gamma^i_{jk} (symmetric in j, k)."""
    check_point(metric, p)
    return engine.metric_functions(metric).gamma(p.x, p.y)


def tensor_frame(metric: MetricSpec, p: PointTangent) -> TensorFrame:
    check_point(metric, p)
    F2, g, ginv, C, I, G, N, Gamma = engine.metric_functions(metric).bundle(p.x, p.y)
    return TensorFrame(at=p, F=float(np.sqrt(F2)), g=g, g_inv=ginv,
                       C=C, I=I, G=G, N=N, Gamma=Gamma)


# -- finite-difference derivative combinators --------------------------------

def _fd_partials(metric: MetricSpec, field, x, y, h_base=FD_BASE_STEP):
    """d(field)/dx^m and d(field)/dy^m by central differences + Richardson."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = x.shape[0]

    def deriv(var, idx):
        coord = x[idx] if var == 0 else y[idx]
        h = h_base * max(1.0, abs(coord))

        def shift(s):
            xx, yy = x.copy(), y.copy()
            if var == 0:
                xx[idx] += s
                if not metric.in_domain(xx):
                    raise StencilLeavesChart(f"x-stencil leaves chart at {xx}")
            else:
                yy[idx] += s
            return np.asarray(field(xx, yy), float)

        d1 = (shift(h) - shift(-h)) / (2 * h)
        d2 = (shift(h / 2) - shift(-h / 2)) / h
        return (4.0 * d2 - d1) / 3.0

    dx = np.stack([deriv(0, m) for m in range(n)], axis=-1)
    dy = np.stack([deriv(1, m) for m in range(n)], axis=-1)
    return dx, dy


def horizontal_derivative_field(metric: MetricSpec, field, valence: str = "",
                                h_base: float = FD_BASE_STEP):
    """Return the field (x, y) -> T_{...|m}, one extra covariant axis last.

    valence: one character per existing slot of T ('u' or 'd'); "" for scalars.
    """
    fns = engine.metric_functions(metric)

    def out(x, y):
        dx, dy = _fd_partials(metric, field, x, y, h_base)
        bundle = fns.bundle(x, y)
        N, Gamma = bundle[6], bundle[7]
        cov = dx - np.einsum("...s,sm->...m", dy, N)
        if valence:
            T = np.asarray(field(x, y), float)
            letters = "abcdefgh"[: len(valence)]
            for slot, kind in enumerate(valence):
                sl = letters[slot]
                src = letters.replace(sl, "p")
                if kind == "u":
                    cov = cov + np.einsum(f"{sl}pm,{src}->{letters}m", Gamma, T)
                elif kind == "d":
                    cov = cov - np.einsum(f"p{sl}m,{src}->{letters}m", Gamma, T)
                else:
                    raise ValueError(f"valence characters must be 'u'/'d', got {kind!r}")
        return cov
    return out


def vertical_derivative_field(metric: MetricSpec, field):
    """Return the field (x, y) -> dT/dy^m (plain vertical derivative)."""
    def out(x, y):
        _, dy = _fd_partials(metric, field, x, y)
        return dy
    return out


def horizontal_deriv_scalar(metric: MetricSpec, p: PointTangent, field) -> np.ndarray:
    """delta(field)/delta x^m at p for a scalar field on TM_0."""
    check_point(metric, p)
    return horizontal_derivative_field(metric, field, "")(p.x, p.y)


def horizontal_deriv_tensor(metric: MetricSpec, p: PointTangent, field,
                            valence: str) -> np.ndarray:
    """Chern horizontal covariant derivative at p; one extra lower index last."""
    check_point(metric, p)
    return horizontal_derivative_field(metric, field, valence)(p.x, p.y)


def vertical_deriv_tensor(metric: MetricSpec, p: PointTangent, field) -> np.ndarray:
    check_point(metric, p)
    return vertical_derivative_field(metric, field)(p.x, p.y)
