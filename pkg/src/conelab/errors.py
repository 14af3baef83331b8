"""Exception hierarchy shared by every conelab module."""


class ConelabError(Exception):
    """Base class for all errors raised by conelab."""


class OutsideCone(ConelabError):
    """A point lies outside the solid cone."""


class VertexSingular(ConelabError):
    """A quantity was requested at (or too near) the vertex where it blows up."""


class BoundaryTooClose(ConelabError):
    """A finite-difference stencil would cross the boundary of the spherical region."""


class DegreeZero(ConelabError):
    """An operation dividing by the homogeneity degree was called with k = 0."""


class CriticalDegree(ConelabError):
    """The degree k = -(n+1) makes the oriented volume undefined."""


class NonRadialDensity(ConelabError):
    """An operation that assumes f = c|p|^k received another profile."""


class SingularMass(ConelabError):
    """A density weight at some sample is not finite."""


class ProjectionDegenerate(ConelabError):
    """The weighted constant vector is null, so the mean-zero space is ill defined."""


class StencilExitsCone(ConelabError):
    """A deformed surface in a time stencil left the cone."""


class WrongDegreeRange(ConelabError):
    """The degree lies in a range where the requested inequality is not available."""


class HypothesisViolated(ConelabError):
    """Inputs do not satisfy the hypotheses an estimate depends on."""


class NoSpectralReference(ConelabError):
    """No separable closed-form spectrum exists for this region."""


class TooManyDofs(ConelabError):
    """A dense eigensolve was requested above the supported size."""


class ConfigError(ConelabError):
    """A scenario file is unreadable or fails validation."""


class ExpressionError(ConelabError):
    """A density expression failed to parse or evaluate.

    :param message: human readable reason
    :param offset: zero-based character offset into the source string
    """

    def __init__(self, message: str, offset: int = 0):
        self.offset = int(offset)
        super().__init__(f"{message} (at offset {self.offset})")
