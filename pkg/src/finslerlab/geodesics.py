"""Geodesic integration, parallel frames, forward distance, path sampling.

The integrator is an embedded Dormand-Prince 5(4) pair with two extra
acceptance rules on top of local error control: a step is rejected when the
unit-speed invariant F(x, y) drifts beyond tolerance (F is a first integral
of the spray, so drift measures integrator quality and is monitored, never
re-projected), and a step that would leave the chart is bisected down to the
exit time, which is reported on the returned path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from . import engine
from .catalog import MeasureSpec, MetricSpec
from .errors import GeodesicLeavesChart, NoConvergence
from .jets import PointTangent, check_point

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])


@dataclass
class GeodesicPath:
    """Arc-length sampled geodesic: t grid, states, optional parallel frame.

    frame[k, a, :] is the a-th frame vector at sample k (last vector = velocity).
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    frame: np.ndarray | None = None
    left_chart: bool = False
    t_exit: float | None = None
    f_drift: float = 0.0

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def endpoint(self):
        return self.x[-1], self.y[-1]


def _rhs_factory(metric: MetricSpec):
    fns = engine.metric_functions(metric)
    return fns.geodesic_rhs_state, fns


def backward_initial(metric: MetricSpec, p: PointTangent) -> PointTangent:
    """Initial condition of the backward geodesic: (x, -y / F(x, -y))."""
    fns = engine.metric_functions(metric)
    f = fns.f(p.x, -p.y)
    return PointTangent(p.x, -p.y / f)


def integrate_geodesic(metric: MetricSpec, p0: PointTangent, t_end: float,
                       tol: float = 1e-8, samples: int = 0,
                       step_tol: float = 1e-11) -> GeodesicPath:
    """Unit-speed geodesic from p0 (y renormalized at t=0 only) to t_end > 0.

    `tol` bounds the accepted |F - 1| drift per sample; `samples` fixes the
    uniform output grid (default: ceil(100 * t_end) + 1, at least 9).
    """
    if t_end <= 0:
        raise ValueError("t_end must be > 0; integrate backward geodesics "
                         "from backward_initial(...)")
    check_point(metric, p0)
    rhs, fns = _rhs_factory(metric)
    F0 = fns.f(p0.x, p0.y)
    z = np.concatenate([p0.x, p0.y / F0])
    n = p0.n

    if samples <= 0:
        samples = max(9, int(math.ceil(100 * t_end)) + 1)
    grid = np.linspace(0.0, t_end, samples)

    ts = [0.0]
    zs = [z.copy()]
    drift = 0.0

    t = 0.0
    gi = 1
    h = min(1e-3, t_end / 8)
    h_min = 1e-13 * max(1.0, t_end)
    k1 = rhs(z)
    left = False
    t_exit = None

    while gi < samples:
        target = grid[gi]
        h = min(h, target - t)
        if h < h_min:
            h = h_min
        ks = [k1]
        for i in range(1, 7):
            zi = z + h * sum(a * k for a, k in zip(_DP_A[i], ks))
            ks.append(rhs(zi))
        K = np.stack(ks)
        z5 = z + h * (_DP_B5 @ K)
        z4 = z + h * (_DP_B4 @ K)
        scale = step_tol * np.maximum(1.0, np.abs(z5))
        err = float(np.sqrt(np.mean(((z5 - z4) / scale) ** 2)))

        accept = err <= 1.0
        if accept and not metric.in_domain(z5[:n]):
            # bisect toward the chart boundary
            if h <= 4 * h_min:
                left = True
                t_exit = t + h
                break
            h *= 0.5
            continue
        fdrift = abs(fns.f(z5[:n], z5[n:]) - 1.0) if accept else 0.0
        if accept and fdrift > tol:
            # first-integral drift beyond tolerance: reject and refine
            h *= 0.5
            continue
        if accept:
            t_new = target if abs(t + h - target) <= 1e-12 * max(1.0, target) else t + h
            t, z = t_new, z5
            k1 = ks[6]  # FSAL
            drift = max(drift, fdrift)
            if t >= target - 1e-12 * max(1.0, target):
                ts.append(target)
                zs.append(z.copy())
                gi += 1
        factor = 0.9 * err ** (-0.2) if err > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))
        if h < h_min:
            h = h_min

    Z = np.stack(zs)
    return GeodesicPath(t=np.array(ts), x=Z[:, :n], y=Z[:, n:],
                        left_chart=left, t_exit=t_exit, f_drift=drift)


def two_sided_states(metric: MetricSpec, x, yhat, h: float, k: int):
    """States (x, y) at t = -k h .. k h on the geodesic through (x, yhat).

    The backward side integrates the same spray ODE with reversed time; the
    result is the two-sided geodesic extension used by the S-curvature.
    """
    rhs, fns = _rhs_factory(metric)
    n = len(x)
    out = {0: (np.asarray(x, float), np.asarray(yhat, float))}

    def march(sign):
        z = np.concatenate([x, yhat])
        for j in range(1, k + 1):
            z = _rk4_span(rhs, z, sign * h, 8)
            if not metric.in_domain(z[:n]):
                raise GeodesicLeavesChart(
                    f"short geodesic leaves chart at t = {sign * j * h}")
            out[sign * j] = (z[:n].copy(), z[n:].copy())
    march(+1)
    march(-1)
    return [out[j] for j in range(-k, k + 1)]


def _rk4_span(rhs, z, span, substeps):
    h = span / substeps
    for _ in range(substeps):
        k1 = rhs(z)
        k2 = rhs(z + 0.5 * h * k1)
        k3 = rhs(z + 0.5 * h * k2)
        k4 = rhs(z + h * k3)
        z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


def seed_orthonormal_frame(g: np.ndarray, y: np.ndarray) -> np.ndarray:
    """g-orthonormal frame rows E_1..E_n with E_n = y (y assumed g-unit)."""
    n = len(y)
    basis = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        w = e - float(e @ g @ y) * y
        for b in basis:
            w = w - float(w @ g @ b) * b
        nrm = math.sqrt(max(float(w @ g @ w), 0.0))
        if nrm > 1e-10:
            basis.append(w / nrm)
        if len(basis) == n - 1:
            break
    basis.append(y.copy())
    return np.stack(basis)


def _hermite(t0, z0, d0, t1, z1, d1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * z0 + h10 * h * d0 + h01 * z1 + h11 * h * d1


def state_at(metric: MetricSpec, path: GeodesicPath, t: float):
    """Cubic-Hermite interpolated (x, y) between path samples."""
    rhs, _ = _rhs_factory(metric)
    idx = int(np.searchsorted(path.t, t))
    idx = min(max(idx, 1), len(path.t) - 1)
    i0, i1 = idx - 1, idx
    z0 = np.concatenate([path.x[i0], path.y[i0]])
    z1 = np.concatenate([path.x[i1], path.y[i1]])
    z = _hermite(path.t[i0], z0, rhs(z0), path.t[i1], z1, rhs(z1), t)
    n = path.n
    return z[:n], z[n:]


def parallel_frame(metric: MetricSpec, path: GeodesicPath,
                   seed: np.ndarray | None = None) -> np.ndarray:
    """Transport a g_{velocity}-orthonormal frame along the path.

    Solves dE^i/dt = -Gamma^i_{jk}(x, ydot) E^j xdot^k for all frame rows at
    once (classical RK4 on the sample grid); returns frame[k, a, :] and also
    attaches it to the path.
    """
    fns = engine.metric_functions(metric)
    rhs, _ = _rhs_factory(metric)
    if seed is None:
        g0 = fns.g(path.x[0], path.y[0])
        seed = seed_orthonormal_frame(g0, path.y[0])

    def A(x, y):
        gamma = fns.gamma(x, y)
        return -np.einsum("ijk,k->ij", gamma, y)

    m = len(path.t)
    frames = np.empty((m, seed.shape[0], seed.shape[1]))
    frames[0] = seed
    E = seed.T  # columns are frame vectors
    for k in range(m - 1):
        t0, t1 = path.t[k], path.t[k + 1]
        h = t1 - t0
        xm, ym = state_at(metric, path, 0.5 * (t0 + t1))
        A0 = A(path.x[k], path.y[k])
        Am = A(xm, ym)
        A1 = A(path.x[k + 1], path.y[k + 1])
        K1 = A0 @ E
        K2 = Am @ (E + 0.5 * h * K1)
        K3 = Am @ (E + 0.5 * h * K2)
        K4 = A1 @ (E + h * K3)
        E = E + (h / 6.0) * (K1 + 2 * K2 + 2 * K3 + K4)
        frames[k + 1] = E.T
    path.frame = frames
    return frames


def frame_orthonormality_drift(metric: MetricSpec, path: GeodesicPath) -> float:
    fns = engine.metric_functions(metric)
    worst = 0.0
    for k in range(len(path.t)):
        g = fns.g(path.x[k], path.y[k])
        gram = path.frame[k] @ g @ path.frame[k].T
        worst = max(worst, float(np.max(np.abs(gram - np.eye(path.n)))))
    return worst


# -- forward distance by shooting ---------------------------------------------

def _direction_from_angles(angles):
    # hyperspherical: u_i = cos(a_i) * prod_{j<i} sin(a_j); last = prod sin(a_j)
    n = len(angles) + 1
    u = np.empty(n)
    s = 1.0
    for i in range(n - 1):
        u[i] = s * math.cos(angles[i])
        s *= math.sin(angles[i])
    u[n - 1] = s
    return u


def _angles_from_direction(u):
    n = len(u)
    angles = []
    s = 1.0
    v = np.asarray(u, float)
    v = v / np.linalg.norm(v)
    for i in range(n - 1):
        c = np.clip(v[i] / s if s > 1e-300 else 1.0, -1.0, 1.0)
        a = math.acos(c)
        if i == n - 2:
            # resolve the sign of the last coordinate
            if v[-1] < 0:
                a = -a
        angles.append(a)
        s *= math.sin(a) if math.sin(a) != 0 else 1e-300
    return np.array(angles)


def forward_distance(metric: MetricSpec, p, q, restarts: int = 6,
                     t_cap: float | None = None, coarse: int = 0,
                     tol: float = 1e-5):
    """Forward distance d(p, q) by geodesic shooting; returns (d, path).

    Coarse sweep over unit directions, then damped Gauss-Newton on the
    endpoint map over (direction angles, stop time); the arc length of the
    best hit is the forward distance for minimal geodesics.  Raises
    NoConvergence with the best endpoint residual on failure.
    """
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    metric.require_in_domain(p)
    metric.require_in_domain(q)
    n = len(p)
    fns = engine.metric_functions(metric)
    d0 = fns.f(p, q - p)
    if t_cap is None:
        t_cap = max(3.0 * d0, 1e-2)
    if coarse <= 0:
        coarse = 64 if n == 2 else 512

    def coarse_shoot(u):
        y0 = u / fns.f(p, u)
        path = integrate_geodesic(metric, PointTangent(p, y0), t_cap,
                                  tol=1e-6, samples=64, step_tol=1e-8)
        d2 = np.sum((path.x - q[None, :]) ** 2, axis=1)
        i = int(np.argmin(d2))
        return math.sqrt(float(d2[i])), float(path.t[i] if path.t[i] > 0 else path.t[1])

    def endpoint(params, step_tol=1e-11):
        ang, T = params[:-1], params[-1]
        u = _direction_from_angles(ang)
        y0 = u / fns.f(p, u)
        path = integrate_geodesic(metric, PointTangent(p, y0), float(T),
                                  tol=1e-6, samples=2, step_tol=step_tol)
        if path.left_chart:
            return None
        return path.x[-1]

    if n == 2:
        th = np.linspace(0.0, 2 * math.pi, coarse, endpoint=False)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        rng = np.random.default_rng(97531)
        dirs = rng.standard_normal((coarse, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    results = []
    for u in dirs:
        res, tt = coarse_shoot(u)
        results.append((res, tt, u))
    results.sort(key=lambda r: r[0])

    best = (math.inf, None)
    for res0, tt0, u0 in results[: max(1, restarts)]:
        params = np.concatenate([_angles_from_direction(u0), [max(tt0, 1e-3)]])
        for _ in range(30):
            x_end = endpoint(params)
            if x_end is None:
                break
            r = x_end - q
            rnorm = float(np.linalg.norm(r))
            if rnorm < best[0]:
                best = (rnorm, params.copy())
            if rnorm <= 1e-9:
                break
            # forward-difference Jacobian of the endpoint map
            J = np.empty((n, len(params)))
            hs = 1e-7 * np.maximum(1.0, np.abs(params))
            for k in range(len(params)):
                pk = params.copy()
                pk[k] += hs[k]
                xk = endpoint(pk)
                if xk is None:
                    xk = x_end
                J[:, k] = (xk - x_end) / hs[k]
            delta, *_ = np.linalg.lstsq(J, -r, rcond=None)
            # damping: keep angle moves small and the stop time positive
            scale = float(np.max(np.abs(delta[:-1]))) if len(delta) > 1 else 0.0
            if scale > 0.3:
                delta *= 0.3 / scale
            params = params + delta
            params[-1] = min(max(params[-1], 1e-6), 2.0 * t_cap)
        if best[0] <= min(tol, 1e-7):
            break
    if best[0] > tol:
        raise NoConvergence(best[0])
    rnorm, params = best
    tt = float(params[-1])
    u = _direction_from_angles(params[:-1])
    y0 = u / fns.f(p, u)
    final = integrate_geodesic(metric, PointTangent(p, y0), tt,
                               tol=1e-9, samples=max(60, int(100 * tt) + 1))
    return float(tt), final


# -- sampling fields along paths ----------------------------------------------

def grid_derivative(t: np.ndarray, v: np.ndarray, order: int = 1) -> np.ndarray:
    """Derivative of a uniformly sampled column (4th-order interior stencils)."""
    h = t[1] - t[0]
    v = np.asarray(v, float)
    m = len(v)
    out = np.empty(m)
    if order == 1:
        for i in range(m):
            if 2 <= i <= m - 3:
                out[i] = (v[i - 2] - 8 * v[i - 1] + 8 * v[i + 1] - v[i + 2]) / (12 * h)
            elif i == 0:
                out[i] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3]
                          - 3 * v[4]) / (12 * h)
            elif i == 1:
                out[i] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3]
                          + v[4]) / (12 * h)
            elif i == m - 2:
                out[i] = (3 * v[m - 1] + 10 * v[m - 2] - 18 * v[m - 3]
                          + 6 * v[m - 4] - v[m - 5]) / (12 * h)
            else:
                out[i] = (25 * v[m - 1] - 48 * v[m - 2] + 36 * v[m - 3]
                          - 16 * v[m - 4] + 3 * v[m - 5]) / (12 * h)
        return out
    if order == 2:
        for i in range(m):
            if 2 <= i <= m - 3:
                out[i] = (-v[i - 2] + 16 * v[i - 1] - 30 * v[i] + 16 * v[i + 1]
                          - v[i + 2]) / (12 * h * h)
            elif i <= 1:
                out[i] = (2 * v[i] - 5 * v[i + 1] + 4 * v[i + 2] - v[i + 3]) / (h * h)
            else:
                out[i] = (2 * v[i] - 5 * v[i - 1] + 4 * v[i - 2] - v[i - 3]) / (h * h)
        return out
    raise ValueError("order must be 1 or 2")


SAMPLE_FIELDS = ("F", "Ric", "S", "Sdot", "tau", "scalarR", "RicInf", "flag-spectrum")


def sample_along(metric: MetricSpec, measure: MeasureSpec, path: GeodesicPath,
                 fields) -> dict:
    """Evaluate named fields at every path sample; returns aligned columns.

    S and Sdot are the first/second derivatives of the distortion column along
    the (geodesic) path, per their definition.
    """
    from . import curvature  # deferred to avoid an import cycle

    for f in fields:
        if f not in SAMPLE_FIELDS:
            raise ValueError(f"unknown field {f!r}; choose from {SAMPLE_FIELDS}")
    m = len(path.t)
    cols: dict = {}
    fns = engine.metric_functions(metric)

    if "F" in fields:
        cols["F"] = np.array([fns.f(path.x[k], path.y[k]) for k in range(m)])
    need_tau = {"tau", "S", "Sdot", "RicInf"} & set(fields)
    if need_tau:
        mf = engine.measure_functions(metric, measure)
        tau = np.array([mf.tau(path.x[k], path.y[k]) for k in range(m)])
        if "tau" in fields:
            cols["tau"] = tau
        if "S" in fields:
            cols["S"] = grid_derivative(path.t, tau, 1)
        if {"Sdot", "RicInf"} & set(fields):
            sdot = grid_derivative(path.t, tau, 2)
            if "Sdot" in fields:
                cols["Sdot"] = sdot
    need_curv = {"Ric", "scalarR", "RicInf", "flag-spectrum"} & set(fields)
    if need_curv:
        rics = np.empty(m)
        scal = np.empty(m)
        spec_cols = None
        for k in range(m):
            fr = curvature.curvature_frame(metric, PointTangent(path.x[k], path.y[k]))
            rics[k] = fr.ric
            scal[k] = fr.scalarR
            if "flag-spectrum" in fields:
                ev = curvature.flag_spectrum(fr)
                if spec_cols is None:
                    spec_cols = np.empty((m, len(ev)))
                spec_cols[k] = ev
        if "Ric" in fields:
            cols["Ric"] = rics
        if "scalarR" in fields:
            cols["scalarR"] = scal
        if "RicInf" in fields:
            cols["RicInf"] = rics + sdot
        if "flag-spectrum" in fields and spec_cols is not None:
            for j in range(spec_cols.shape[1]):
                cols[f"flag{j + 1}"] = spec_cols[:, j]
    return cols


def write_path_csv(path: GeodesicPath, file, extra_columns: dict | None = None):
    """CSV export: header t, x1..xn, y1..yn, plus any extra field columns."""
    n = path.n
    headers = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    cols = [path.t] + [path.x[:, i] for i in range(n)] + [path.y[:, i] for i in range(n)]
    for name, col in (extra_columns or {}).items():
        headers.append(name)
        cols.append(np.asarray(col))
    lines = [",".join(headers)]
    for k in range(len(path.t)):
        lines.append(",".join(f"{float(c[k]):.17g}" for c in cols))
    text = "\n".join(lines) + "\n"
    if hasattr(file, "write"):
        file.write(text)
    else:
        with open(file, "w") as fh:
            fh.write(text)
