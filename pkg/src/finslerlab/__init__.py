"""finslerlab: numerical laboratory for Finsler metric measure spaces."""

from .catalog import (BH_MEASURE, GAUSSIAN_MEASURE, Chart, MeasureSpec,
                      MetricSpec, f_value, load_metric_spec, reversibility,
                      validate_spec)
from .curvature import (CurvatureFrame, MeasureFrame, bh_density,
                        curvature_frame, distortion, flag_curvature,
                        measure_frame, s_curvature, weighted_ricci)
from .geodesics import (GeodesicPath, forward_distance, integrate_geodesic,
                        parallel_frame, sample_along)
from .jets import Jet, PointTangent, evaluate_jet, fd_jet_oracle
from .tensors import TensorFrame, tensor_frame

__all__ = [
    "BH_MEASURE", "GAUSSIAN_MEASURE", "Chart", "MeasureSpec", "MetricSpec",
    "f_value", "load_metric_spec", "reversibility", "validate_spec",
    "CurvatureFrame", "MeasureFrame", "bh_density", "curvature_frame",
    "distortion", "flag_curvature", "measure_frame", "s_curvature",
    "weighted_ricci",
    "GeodesicPath", "forward_distance", "integrate_geodesic", "parallel_frame",
    "sample_along",
    "Jet", "PointTangent", "evaluate_jet", "fd_jet_oracle",
    "TensorFrame", "tensor_frame",
]

__version__ = "0.1.0"
