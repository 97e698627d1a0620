"""Curvature and measure quantities: Chern curvatures, flag/Ricci/scalar
curvature, g-Ricci variants, Busemann-Hausdorff density, distortion,
S-curvature, and weighted Ricci.

Pointwise curvature tensors are exact (jet propagation); distortion
derivatives go through the tensor-level difference combinators; the
S-curvature follows its definition, a derivative of the distortion along the
integrated geodesic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import algebra, engine, tensors
from .catalog import MeasureSpec, MetricSpec
from .errors import DegenerateFlag, NValueInvalid, OutOfChart
from .jets import PointTangent, check_point

RIC_N_SENTINEL = -math.inf
S_ZERO_TOL = 1e-6  # |S| <= tol * F counts as vanishing for Ric^n


@dataclass
class CurvatureFrame:
    """Chern curvature stack at one (x, y).  flag_up/flag_low are the two
    forms of the flag curvature tensor (R^i_k and R_jk)."""

    at: PointTangent
    F: float
    g: np.ndarray
    g_inv: np.ndarray
    R4: np.ndarray
    P4: np.ndarray
    L: np.ndarray
    J: np.ndarray
    flag_up: np.ndarray
    flag_low: np.ndarray
    ric: float
    barRic: np.ndarray
    tildeRic: np.ndarray
    scalarR: float

    @property
    def R3(self) -> np.ndarray:
        return algebra.r3(self.R4, self.at.y)


@dataclass
class MeasureFrame:
    """Measure quantities at one (x, y)."""

    at: PointTangent
    F: float
    sigma: float
    tau: float
    tauGrad: np.ndarray
    tauHess: np.ndarray
    S: float
    Sdot: float
    ricN: dict


def curvature_frame(metric: MetricSpec, p: PointTangent) -> CurvatureFrame:
    check_point(metric, p)
    F2, g, ginv, C, I, G, N, Gamma = engine.metric_functions(metric).bundle(p.x, p.y)
    R4, P4, L = engine.curvature_functions(metric).bundle(p.x, p.y)
    J = algebra.mean_landsberg(L, g, ginv)
    flag_up, flag_low = algebra.flag_tensors(R4, g, p.y)
    barRic = algebra.bar_ricci(R4, g, ginv)
    return CurvatureFrame(
        at=p, F=float(np.sqrt(F2)), g=g, g_inv=ginv, R4=R4, P4=P4, L=L, J=J,
        flag_up=flag_up, flag_low=flag_low, ric=float(np.trace(flag_up)),
        barRic=barRic, tildeRic=0.5 * (barRic + barRic.T),
        scalarR=float(algebra.scalar_curvature(barRic, ginv)),
    )


def chern_riemann(metric: MetricSpec, p: PointTangent) -> np.ndarray:
    check_point(metric, p)
    return engine.curvature_functions(metric).bundle(p.x, p.y)[0]


def chern_P(metric: MetricSpec, p: PointTangent) -> np.ndarray:
    check_point(metric, p)
    return engine.curvature_functions(metric).bundle(p.x, p.y)[1]


def landsberg(metric: MetricSpec, p: PointTangent):
    check_point(metric, p)
    F2, g, ginv, *_ = engine.metric_functions(metric).bundle(p.x, p.y)
    L = engine.curvature_functions(metric).bundle(p.x, p.y)[2]
    return L, algebra.mean_landsberg(L, g, ginv)


def flag_curvature(curv: CurvatureFrame, g: np.ndarray, v) -> float:
    """K of the flag spanned by (y, v); invariant under v -> a v + b y."""
    y = curv.at.y
    v = np.asarray(v, float)
    F2 = float(y @ g @ y)
    gy = g @ y
    vperp = v - (float(v @ gy) / F2) * y
    denom = float(vperp @ g @ vperp)
    if denom <= 1e-12 * max(1.0, float(v @ g @ v)):
        raise DegenerateFlag("flag edge is parallel to the pole y")
    return float(vperp @ curv.flag_low @ vperp) / (F2 * denom)


def flag_spectrum(curv: CurvatureFrame) -> np.ndarray:
    """Eigenvalues of the flag curvature operator on the g-orthocomplement of y."""
    g, y = curv.g, curv.at.y
    n = y.shape[0]
    F2 = float(y @ g @ y)
    basis = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        w = e - (float(e @ g @ y) / F2) * y
        for b in basis:
            w = w - float(w @ g @ b) * b
        nrm = math.sqrt(max(float(w @ g @ w), 0.0))
        if nrm > 1e-8:
            basis.append(w / nrm)
        if len(basis) == n - 1:
            break
    Q = np.stack(basis, axis=1)
    M = Q.T @ curv.flag_low @ Q / F2
    return np.sort(np.linalg.eigvalsh(0.5 * (M + M.T)))


def ricci(curv: CurvatureFrame) -> float:
    return float(np.trace(curv.flag_up))


def g_ricci(curv: CurvatureFrame, g: np.ndarray, g_inv: np.ndarray):
    barRic = algebra.bar_ricci(curv.R4, g, g_inv)
    return barRic, 0.5 * (barRic + barRic.T)


def scalar_curvature(curv: CurvatureFrame, g_inv: np.ndarray) -> float:
    return float(algebra.scalar_curvature(curv.barRic, g_inv))


# -- measures ----------------------------------------------------------------

def bh_density(metric: MetricSpec, x, quadrature: int = 0) -> float:
    """Busemann-Hausdorff density sigma_B(x) by radial direction quadrature."""
    x = np.asarray(x, float)
    if not metric.in_domain(x):
        raise OutOfChart(f"x = {x} outside chart")
    measure = MeasureSpec(kind="busemann-hausdorff", quadrature=quadrature)
    return engine.measure_functions(metric, measure).sigma(x)


def sigma_value(metric: MetricSpec, measure: MeasureSpec, x) -> float:
    x = np.asarray(x, float)
    if not metric.in_domain(x):
        raise OutOfChart(f"x = {x} outside chart")
    return engine.measure_functions(metric, measure).sigma(x)


def distortion(metric: MetricSpec, measure: MeasureSpec, p: PointTangent) -> float:
    """tau = ln(sqrt(det g(x, y)) / sigma(x))."""
    check_point(metric, p)
    return engine.measure_functions(metric, measure).tau(p.x, p.y)


def tau_field(metric: MetricSpec, measure: MeasureSpec):
    return engine.measure_functions(metric, measure).tau


def tau_gradient_field(metric: MetricSpec, measure: MeasureSpec):
    """Field (x, y) -> tau_{|m} (horizontal gradient of the distortion)."""
    return tensors.horizontal_derivative_field(metric, tau_field(metric, measure), "")


def tau_derivatives(metric: MetricSpec, measure: MeasureSpec, p: PointTangent):
    """tau_{|i} and tau_{|i|j} (first index differentiates first; the order
    matters, both index orders are recoverable from the returned Hessian)."""
    check_point(metric, p)
    grad_field = tau_gradient_field(metric, measure)
    hess = tensors.horizontal_derivative_field(metric, grad_field, "d")(p.x, p.y)
    return grad_field(p.x, p.y), hess


def s_curvature(metric: MetricSpec, measure: MeasureSpec, p: PointTangent,
                h: float = 1e-2):
    """S and Sdot by 5-point differentiation of tau along the geodesic.

    S(x, y) = d/dt tau(gamma, gammadot) at t = 0 on the unit-speed geodesic
    through (x, y/F); values are rescaled back to the given y by homogeneity
    (S is 1-homogeneous, Sdot 2-homogeneous).
    """
    from . import geodesics  # deferred: geodesics imports this module

    check_point(metric, p)
    fns = engine.metric_functions(metric)
    F = fns.f(p.x, p.y)
    yhat = p.y / F
    mf = engine.measure_functions(metric, measure)
    states = geodesics.two_sided_states(metric, p.x, yhat, h, 2)
    taus = np.array([mf.tau(xs, ys) for xs, ys in states])  # t = -2h..2h
    S_unit = (taus[0] - 8 * taus[1] + 8 * taus[3] - taus[4]) / (12 * h)
    Sdot_unit = (-taus[0] + 16 * taus[1] - 30 * taus[2] + 16 * taus[3] - taus[4]) / (12 * h * h)
    return F * S_unit, F * F * Sdot_unit


def weighted_ricci(curv: CurvatureFrame, mframe: MeasureFrame, Nvalue) -> float:
    """Ric^N; Ric^n is the flagged -inf sentinel whenever S does not vanish."""
    n = curv.at.n
    if Nvalue != math.inf and Nvalue < n:
        raise NValueInvalid(f"N = {Nvalue} below dimension {n}")
    base = curv.ric + mframe.Sdot
    if Nvalue == math.inf:
        return float(base)
    if Nvalue == n:
        if abs(mframe.S) <= S_ZERO_TOL * mframe.F:
            return float(base)
        return RIC_N_SENTINEL
    return float(base - mframe.S**2 / (Nvalue - n))


def measure_frame(metric: MetricSpec, measure: MeasureSpec, p: PointTangent,
                  N_finite: float | None = None) -> MeasureFrame:
    check_point(metric, p)
    n = p.n
    if N_finite is None:
        N_finite = n + 2
    mf = engine.measure_functions(metric, measure)
    F = engine.metric_functions(metric).f(p.x, p.y)
    grad, hess = tau_derivatives(metric, measure, p)
    S, Sdot = s_curvature(metric, measure, p)
    curv = curvature_frame(metric, p)
    frame = MeasureFrame(at=p, F=F, sigma=mf.sigma(p.x), tau=mf.tau(p.x, p.y),
                         tauGrad=grad, tauHess=hess, S=S, Sdot=Sdot, ricN={})
    frame.ricN = {
        n: weighted_ricci(curv, frame, n),
        N_finite: weighted_ricci(curv, frame, N_finite),
        math.inf: weighted_ricci(curv, frame, math.inf),
    }
    return frame


def weighted_g_ricci(metric: MetricSpec, measure: MeasureSpec, p: PointTangent):
    """bar R^inf_ij = bar R_ij + tau_{|i|j}, with g and F^2 for normalization."""
    curv = curvature_frame(metric, p)
    _, hess = tau_derivatives(metric, measure, p)
    return curv.barRic + hess, curv.g, curv.F**2
