#!/usr/bin/env python3
"""Survey the metric catalog: curvature character, S-curvature, reversibility.

Prints one row per catalog entry with the quantities that distinguish the
families (flag curvature range, Ricci/F^2, S/F, distortion, reversibility).
"""
import argparse
import sys

import numpy as np

sys.path.insert(0, "src")

from finslerlab.catalog import BH_MEASURE, Chart, MetricSpec
from finslerlab.curvature import curvature_frame, distortion, flag_curvature, s_curvature
from finslerlab.engine import metric_functions
from finslerlab.jets import PointTangent
from finslerlab.catalog import reversibility


def catalog(n):
    return {
        "euclidean": MetricSpec(n, "euclidean", Chart("ball", 50.0)),
        "sphere": MetricSpec(n, "riemannian", Chart("ball", 2.5),
                             base="sphere-stereographic", curvature=1.0),
        "hyperbolic": MetricSpec(n, "riemannian", Chart("ball", 1.0),
                                 base="hyperbolic-poincare", curvature=1.0),
        "randers/sphere": MetricSpec(n, "randers", Chart("ball", 2.5),
                                     base="sphere-stereographic", curvature=1.0,
                                     b=tuple([0.25] + [0.1] * (n - 1))),
        "funk-ball": MetricSpec(n, "funk-ball", Chart("ball", 1.0)),
        "minkowski-randers": MetricSpec(n, "minkowski-randers", Chart("ball", 50.0),
                                        b=tuple([0.5] + [0.0] * (n - 1))),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dimension", type=int, default=2)
    ap.add_argument("--points", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.dimension
    print(f"{'metric':<20} {'flag K (min..max)':>22} {'Ric/F^2':>10} "
          f"{'S/F':>10} {'tau':>10} {'rho_0':>8}")
    for name, spec in catalog(n).items():
        fns = metric_functions(spec)
        r = 0.4 * spec.chart.radius * spec.domain_fraction()
        flags, rics, ss, taus = [], [], [], []
        for _ in range(args.points):
            x = rng.uniform(-r / np.sqrt(n), r / np.sqrt(n), n)
            y = rng.standard_normal(n)
            y /= fns.f(x, y)
            p = PointTangent(x, y)
            fr = curvature_frame(spec, p)
            v = rng.standard_normal(n)
            flags.append(flag_curvature(fr, fr.g, v))
            rics.append(fr.ric / fr.F**2)
            S, _ = s_curvature(spec, BH_MEASURE, p)
            ss.append(S / fns.f(x, y))
            taus.append(distortion(spec, BH_MEASURE, p))
        rho = reversibility(spec, np.zeros(n), samples=1024)
        print(f"{name:<20} {min(flags):>10.4f}..{max(flags):<10.4f} "
              f"{np.mean(rics):>10.4f} {np.mean(ss):>10.4f} "
              f"{np.mean(np.abs(taus)):>10.4f} {rho:>8.4f}")


if __name__ == "__main__":
    main()
