"""Exception types shared across the package."""


class HinfoptError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(HinfoptError):
    """Matrix shapes are inconsistent with each other or with the plant dims."""


class NotSymmetric(HinfoptError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class SolverError(HinfoptError):
    """An underlying dense linear-algebra routine failed."""


class SvdFailure(SolverError):
    """Singular value decomposition did not converge."""


class SingularResolvent(HinfoptError):
    """e^{j omega} I - A_K is singular at the requested frequency."""


class NotStabilizing(HinfoptError):
    """The gain does not place the closed-loop spectral radius below 1."""


class K0NotStabilizing(NotStabilizing):
    """The initial gain of an optimization run is not stabilizing."""


class UnknownName(HinfoptError):
    """Unrecognized built-in example name."""


class AlphaMissing(HinfoptError):
    """The alpha parameter is required for this built-in example."""


class NoUpperBound(HinfoptError):
    """Bisection failed to bracket the norm below 1e12."""


class EmptyList(HinfoptError):
    """An operation received an empty collection."""


class EmptyLog(HinfoptError):
    """A run log with no iterates cannot be summarized."""


class RhoTooSmall(HinfoptError):
    """Proximal weight rho must exceed the weak-convexity estimate."""


class WrongGainShape(HinfoptError):
    """The gain does not have the shape required by this operation."""


class EmptySample(HinfoptError):
    """Rejection sampling produced no feasible points or segments."""


class AtOptimum(HinfoptError):
    """The point is already optimal within tolerance; the ratio is undefined."""


class PNotPD(HinfoptError):
    """The Lyapunov certificate P is not positive definite."""


class GammaNonPositive(HinfoptError):
    """The performance level gamma must be positive."""


class SchemaError(HinfoptError):
    """Configuration does not match the expected schema.

    Carries a JSON pointer to the offending field in ``json_pointer``.
    """

    def __init__(self, json_pointer: str, message: str):
        self.json_pointer = json_pointer
        super().__init__(f"{json_pointer}: {message}")


class IoError(HinfoptError):
    """Reading or writing an artifact file failed."""
