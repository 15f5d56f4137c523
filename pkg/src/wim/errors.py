"""Exception hierarchy shared by the library and the CLI."""


class WimError(Exception):
    """Base class for all library errors."""

    exit_code = 10


class InvalidSizeError(WimError, ValueError):
    exit_code = 11


class InvalidShapeError(WimError, ValueError):
    exit_code = 12


class MetricError(WimError, ValueError):
    """Raised when a matrix fails the metric axioms.

    ``triple`` holds zero-based indices ``(i, j, k)`` with
    ``d[i][j] > d[i][k] + d[k][j]`` when the triangle inequality is the
    failing axiom.
    """

    exit_code = 13

    def __init__(self, message, triple=None):
        super().__init__(message)
        self.triple = triple


class ShapeError(WimError, ValueError):
    """Dimension mismatch between distributions, metrics and models."""

    exit_code = 14


class DomainError(WimError, ValueError):
    """A parameter point outside the parameter polytope."""

    exit_code = 15


class UnsupportedModelError(WimError, ValueError):
    exit_code = 16


class WrongMethodError(WimError, ValueError):
    """The requested specialised algorithm does not apply to this input."""

    exit_code = 17


class GeometryError(WimError, ValueError):
    exit_code = 18


class ExactnessError(WimError, ValueError):
    """An exact (rational) computation was requested where none exists."""

    exit_code = 19


class CapacityError(WimError, RuntimeError):
    """A size cap was exceeded.

    ``partial`` carries whatever was completed before the cap hit, e.g. a
    partial f-vector keyed by dimension.
    """

    exit_code = 20

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
