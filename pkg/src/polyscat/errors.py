"""Exception hierarchy shared by all polyscat modules.

Exceptions fall into two families so the command line runner can map them to
exit codes: :class:`InputError` (bad geometry, bad configuration, violated
preconditions) and :class:`NumericalError` (a well-posed computation that
failed to converge or produced an unusable answer).
"""


class PolyscatError(Exception):
    """Base class for every error raised by the package."""


class InputError(PolyscatError, ValueError):
    """The caller supplied data that violates a documented precondition."""


class MissingFile(InputError):
    """A referenced input file does not exist."""

    def __init__(self, path, what="input file"):
        self.path = str(path)
        super().__init__(f"{what} not found: {path}")


class NumericalError(PolyscatError, ArithmeticError):
    """A numerical procedure failed on otherwise valid input."""


# geometry
class DegeneratePolytope(InputError):
    pass


class NotAVertex(InputError):
    pass


class ClearanceViolated(InputError):
    def __init__(self, cell_index, message=None):
        self.cell_index = cell_index
        super().__init__(message or f"clearance violated for cell {cell_index}")


class NestingViolated(InputError):
    def __init__(self, shell_index, message=None):
        self.shell_index = shell_index
        super().__init__(message or f"shell {shell_index + 1} is not compactly inside shell {shell_index}")


# media
class SupportOutsideGrid(InputError):
    pass


class InadmissiblePotential(InputError):
    pass


# forward / farfield
class EvaluationAtSingularity(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class DirectionMismatch(InputError):
    pass


class NoConvergence(NumericalError):
    pass


class DivergentSeries(NumericalError):
    pass


# conelab
class NonConvergent(InputError):
    """The cone Laplace integral does not converge absolutely at this frequency."""


class NoSeparatingVector(InputError):
    """The cone is not strictly contained in an open half-space."""


# identities
class RegionNotLipschitzRepresentable(InputError):
    pass


class ExtrapolationUnstable(NumericalError):
    pass


class ZeroDenominator(InputError):
    pass


# inverse
class HypothesisViolated(NumericalError):
    """A total field vanishes at a cell vertex for both potentials."""


class StalledOptimization(NumericalError):
    pass


class UnknownResultType(InputError):
    pass
