"""Exception types shared across the package."""


class FinslerError(Exception):
    """Base class for all finslerlab errors."""


class OutOfChart(FinslerError):
    """Base point lies outside the metric's chart domain."""


class DegenerateDirection(FinslerError):
    """Tangent vector is zero or F(x, y) is below the positivity floor."""


class OrderUnsupported(FinslerError):
    """Requested jet orders exceed the supported range."""


class StencilLeavesChart(FinslerError):
    """A finite-difference stencil point falls outside the chart."""


class SpecInvalid(FinslerError):
    """Metric/measure specification violates a catalog constraint.

    Carries ``field`` (dotted path) and ``line`` (1-based, or None) when the
    violation was detected while parsing a spec file.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        loc = ""
        if field is not None:
            loc = f" [field: {field}" + (f", line {line}" if line is not None else "") + "]"
        super().__init__(message + loc)


class ConfigInvalid(SpecInvalid):
    """Run configuration is malformed; carries field and line like SpecInvalid."""


class NotPositiveDefinite(FinslerError):
    """Fundamental tensor failed the positive-definiteness check."""


class DegenerateFlag(FinslerError):
    """Flag edge vector is parallel to the pole y."""


class QuadratureUnderflow(FinslerError):
    """Indicatrix volume quadrature produced a non-positive value."""


class GeodesicLeavesChart(FinslerError):
    """A geodesic needed by an operation exits the chart before completion."""


class LeftChart(FinslerError):
    """Integration left the chart; carries the exit time ``t_exit``."""

    def __init__(self, t_exit, message=""):
        self.t_exit = t_exit
        super().__init__(message or f"left chart at t = {t_exit}")


class NoConvergence(FinslerError):
    """Boundary-value solve failed; carries the best endpoint residual."""

    def __init__(self, best_residual, message=""):
        self.best_residual = best_residual
        super().__init__(message or f"no convergence; best endpoint residual {best_residual:.3e}")


class HypothesisNotMet(FinslerError):
    """A verification's hypothesis gate failed for this metric/measure."""


class NValueInvalid(FinslerError):
    """Weighted-Ricci parameter N is below the manifold dimension."""


class PathNotMinimal(FinslerError):
    """Path length disagrees with the forward distance between endpoints."""


class NotBerwald(FinslerError):
    """Operation requires a Berwald metric from the catalog."""


class NotLandsberg(FinslerError):
    """Operation requires a Landsberg metric (L-norm above threshold)."""
