"""Mixed partial derivatives of F^2 on the punched tangent bundle.

``evaluate_jet`` returns exact (to rounding) mixed partials produced by
forward-mode jet propagation through the metric's closed-form expression
graph.  ``fd_jet_oracle`` is the independent check: product central-difference
stencils with one Richardson level, evaluated in 80-bit floats so that
fourth-order partials stay meaningful.  The oracle never touches the
propagation machinery; it only calls the closed-form F^2 evaluator.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .catalog import MetricSpec, POSITIVITY_FLOOR, f2_value
from .errors import DegenerateDirection, OrderUnsupported, StencilLeavesChart

MAX_ORDER_X = 3
MAX_ORDER_Y = 4
MAX_ORDER_TOTAL = 6

# step-size bases by total derivative order; scaled by max(1, |coordinate|).
# Orders <= 2 follow the 1e-4 rule; higher orders need larger steps to stay
# above the rounding floor even in 80-bit arithmetic.
FD_STEP_BASE = {1: 1e-4, 2: 2e-4, 3: 1e-3, 4: 5e-3, 5: 8e-3, 6: 1.2e-2}


@dataclass(frozen=True)
class PointTangent:
    """A point of the punched tangent bundle TM_0 in chart coordinates."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass
class Jet:
    """Table of mixed partials of F^2 at one point.

    ``partials`` is keyed by canonical multi-index pairs (exponent tuples
    over x and over y), so permutation symmetry holds exactly by storage.
    ``tensor(a, b)`` returns the dense symmetric array with x-axes first.
    """

    center: PointTangent
    order_x: int
    order_y: int
    partials: dict = field(default_factory=dict)
    _tensors: dict = field(default_factory=dict, repr=False)

    def tensor(self, a: int, b: int) -> np.ndarray:
        return self._tensors[(a, b)]

    def tensor_table(self) -> dict:
        return dict(self._tensors)

    def partial(self, alpha, beta) -> float:
        return self.partials[(tuple(alpha), tuple(beta))]

    def euler_residuals(self):
        """Relative residuals of y-homogeneity at every stored entry.

        F^2 is 2-homogeneous in y, so for each stored (alpha, beta) with
        |beta| + 1 <= order_y:  sum_j y^j P(alpha, beta + e_j)
        = (2 - |beta|) P(alpha, beta).
        """
        y = self.center.y
        n = self.center.n
        out = {}
        scale = max(1.0, max(abs(v) for v in self.partials.values()))
        for (alpha, beta), val in self.partials.items():
            if sum(beta) + 1 > self.order_y:
                continue
            acc = 0.0
            for j in range(n):
                bj = list(beta)
                bj[j] += 1
                acc += y[j] * self.partials[(alpha, tuple(bj))]
            out[(alpha, beta)] = abs(acc - (2 - sum(beta)) * val) / scale
        return out


def _multi_indices(n: int, degree: int):
    """All exponent tuples of length n with given total degree."""
    if degree == 0:
        yield (0,) * n
        return
    for idx in itertools.combinations_with_replacement(range(n), degree):
        exp = [0] * n
        for i in idx:
            exp[i] += 1
        yield tuple(exp)


def _index_sequence(exp):
    seq = []
    for i, e in enumerate(exp):
        seq.extend([i] * e)
    return tuple(seq)


def _symmetrize(t: np.ndarray, a: int, b: int) -> np.ndarray:
    """Average over permutations within the x-axes and within the y-axes."""
    if (a <= 1 and b <= 1) or t.ndim <= 1:
        return t
    acc = np.zeros_like(t)
    count = 0
    for px in itertools.permutations(range(a)):
        for py in itertools.permutations(range(a, a + b)):
            acc += np.transpose(t, px + py)
            count += 1
    return acc / count


def check_point(metric: MetricSpec, p: PointTangent):
    metric.require_in_domain(p.x)
    ynorm2 = float(np.dot(p.y, p.y))
    if not np.isfinite(ynorm2) or ynorm2 == 0.0:
        raise DegenerateDirection("y = 0 is outside the punched tangent bundle")
    f2 = float(f2_value(metric, p.x, p.y))
    if not np.isfinite(f2) or f2 < POSITIVITY_FLOOR**2:
        raise DegenerateDirection(f"F(x, y)^2 = {f2:.3e} below positivity floor")


def evaluate_jet(metric: MetricSpec, p: PointTangent, order_x: int, order_y: int) -> Jet:
    """All mixed partials D^a_x D^b_y F^2 for a <= order_x, b <= order_y."""
    if order_x < 0 or order_y < 0 or order_x > MAX_ORDER_X or order_y > MAX_ORDER_Y \
            or order_x + order_y > MAX_ORDER_TOTAL:
        raise OrderUnsupported(
            f"orders ({order_x}, {order_y}) outside x<={MAX_ORDER_X}, "
            f"y<={MAX_ORDER_Y}, total<={MAX_ORDER_TOTAL}")
    check_point(metric, p)
    table = engine.jet_table_fn(metric, order_x, order_y)(p.x, p.y)
    n = p.n
    tensors = {}
    partials = {}
    for (a, b), raw in table.items():
        t = _symmetrize(np.asarray(raw), a, b)
        tensors[(a, b)] = t
        for alpha in _multi_indices(n, a):
            ia = _index_sequence(alpha)
            for beta in _multi_indices(n, b):
                ib = _index_sequence(beta)
                partials[(alpha, beta)] = float(t[ia + ib]) if (a + b) else float(t)
    return Jet(center=p, order_x=order_x, order_y=order_y,
               partials=partials, _tensors=tensors)


def _stencil_1d(order: int):
    table = {
        0: ([0.0], [1.0]),
        1: ([-1.0, 1.0], [-0.5, 0.5]),
        2: ([-1.0, 0.0, 1.0], [1.0, -2.0, 1.0]),
        3: ([-2.0, -1.0, 1.0, 2.0], [-0.5, 1.0, -1.0, 0.5]),
        4: ([-2.0, -1.0, 0.0, 1.0, 2.0], [1.0, -4.0, 6.0, -4.0, 1.0]),
    }
    if order not in table:
        raise OrderUnsupported(f"no 1-d stencil for per-variable order {order}")
    offs, coefs = table[order]
    return np.asarray(offs, np.longdouble), np.asarray(coefs, np.longdouble)


def fd_jet_oracle(metric: MetricSpec, p: PointTangent, multi_index_x, multi_index_y,
                  step: float | None = None) -> float:
    """Central-difference estimate of D^alpha_x D^beta_y F^2, one Richardson level.

    Multi-indices are exponent tuples of length n.  Runs in extended precision;
    intended for tests, not for production evaluation.
    """
    alpha = tuple(int(a) for a in multi_index_x)
    beta = tuple(int(b) for b in multi_index_y)
    n = p.n
    if len(alpha) != n or len(beta) != n:
        raise OrderUnsupported("multi-indices must have length = dimension")
    order = sum(alpha) + sum(beta)
    check_point(metric, p)
    if order == 0:
        return float(f2_value(metric, p.x, p.y))

    coords = np.concatenate([p.x, p.y])
    if step is None:
        step = FD_STEP_BASE.get(order)
        if step is None:
            raise OrderUnsupported(f"no default step for total order {order}")
    # per-variable steps: h_v = step * max(1, |coordinate_v|)
    h_vars = np.longdouble(step) * np.maximum(1.0, np.abs(coords)).astype(np.longdouble)

    exps = list(alpha) + list(beta)
    x0 = np.asarray(p.x, np.longdouble)
    y0 = np.asarray(p.y, np.longdouble)

    frac = metric.domain_fraction()
    r_eff = metric.chart.radius * frac

    def estimate(shrink):
        offsets, coefs = [], []
        scale = np.longdouble(1.0)
        for v, e in enumerate(exps):
            o, c = _stencil_1d(e)
            hh = h_vars[v] * shrink
            offsets.append(o * hh)
            coefs.append(c)
            scale *= hh**e
        grids = np.meshgrid(*offsets, indexing="ij")
        coef = coefs[0]
        for c in coefs[1:]:
            coef = np.multiply.outer(coef, c)
        coef = coef.ravel()
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        live = coef != 0.0
        coef = coef[live]
        xs = x0[None, :] + pts[live, :n]
        ys = y0[None, :] + pts[live, n:]
        xf = np.asarray(xs, float)
        if metric.chart.kind == "ball":
            inside = np.sum(xf * xf, axis=-1) < r_eff * r_eff
        else:
            inside = np.all(np.abs(xf) < r_eff, axis=-1)
        if not np.all(inside):
            raise StencilLeavesChart(
                f"stencil point x = {xf[~inside][0]} leaves chart")
        vals = f2_value(metric, xs, ys, xp=np)
        if not np.all(np.isfinite(np.asarray(vals, float))) or np.any(vals <= 0.0):
            raise StencilLeavesChart("stencil point hits a degenerate direction")
        return np.dot(coef, vals) / scale

    e1 = estimate(np.longdouble(1.0))
    e2 = estimate(np.longdouble(0.5))
    return float((4.0 * e2 - e1) / 3.0)
