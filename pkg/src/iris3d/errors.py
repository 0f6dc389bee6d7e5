"""Exception taxonomy. Everything raised on an invariant violation derives
from IrisError so the CLI can map it to a single exit code."""


class IrisError(Exception):
    """Base class for invariant violations raised by this package."""


class ShapeError(IrisError, ValueError):
    """Operand shapes are incompatible with an operation's contract."""


class GraphError(IrisError, RuntimeError):
    """Misuse of the computation graph (e.g. backward on a non-scalar)."""


class MeshError(IrisError, ValueError):
    """A triangle mesh violates its structural invariants."""


class SamplingError(IrisError, ValueError):
    """Poisson-disk resampling cannot proceed (e.g. zero total area)."""


class TriangulationError(IrisError, ValueError):
    """Delaunay retriangulation cannot proceed (e.g. collinear input)."""


class CurvatureError(IrisError, ValueError):
    """Curvature estimation failed; carries the offending vertex index."""

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class SectorError(IrisError, ValueError):
    """Sector partitioning or sampling violated a contract."""


class MetricError(IrisError, ValueError):
    """A metric's preconditions are not met (empty sets, extent mismatch)."""


class PhantomError(IrisError, ValueError):
    """Synthetic surface generation failed (e.g. out of image bounds)."""


class ConfigError(IrisError, ValueError):
    """Invalid pipeline or network configuration."""
