"""Exception hierarchy shared by all hallbraid modules."""


class HallBraidError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HallBraidError, ValueError):
    """Invalid parameters, exponents or run configuration."""


class ShapeError(HallBraidError, ValueError):
    """Array sizes do not match the grid they are attached to."""


class MeanModeError(HallBraidError, ValueError):
    """A field carries a y-mean (n = 0 content) where none is allowed."""


class SymmetryError(HallBraidError, ValueError):
    """Coefficients violate u[-m, n] = conj(u[m, n])."""


class DomainError(HallBraidError, ValueError):
    """Lattice index or argument outside the domain of a formula."""


class PoleError(DomainError):
    """Evaluation at a pole of the resonance function."""


class BackwardTimeError(HallBraidError, ValueError):
    """Negative time step requested; the flow is forward-only."""


class StiffnessError(HallBraidError, ValueError):
    """Explicit substep too large for the stiffest retained mode."""


class SpacingError(HallBraidError, ValueError):
    """Snapshots are not uniformly spaced in time."""


class ResolutionError(HallBraidError, ValueError):
    """Time sampling too coarse to resolve a Fourier integral."""


class ParseError(HallBraidError, ValueError):
    """Malformed snapshot, grid table or config file."""


class QuadratureError(HallBraidError, RuntimeError):
    """Numerical quadrature failed to reach its tolerance."""


class ContractionFailure(HallBraidError, RuntimeError):
    """Picard iteration did not contract.

    ``report`` holds the PicardReport of the failing window and
    ``trajectory`` the partial Trajectory when raised from ``solve``.
    """

    def __init__(self, message, report=None, trajectory=None):
        super().__init__(message)
        self.report = report
        self.trajectory = trajectory
