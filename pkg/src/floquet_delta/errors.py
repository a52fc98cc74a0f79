class FloquetError(Exception):
    """Base class for numerical failures raised by this package."""


class SingularMatrixError(FloquetError):
    """A pivot vanished during tridiagonal elimination."""


class ConvergenceError(FloquetError):
    """An iterative procedure hit its cap without meeting tolerance."""


class OutOfBandError(FloquetError, ValueError):
    """An analytic prediction falls outside the first Floquet band."""


class BranchJumpError(FloquetError):
    """A channel momentum crossed its square-root cut during continuation."""
