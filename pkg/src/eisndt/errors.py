"""Exception hierarchy shared by all modules."""


class EISError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(EISError):
    pass


class SeparationViolation(ValidationError):
    def __init__(self, first, second, distance, required):
        self.first = first
        self.second = second
        self.distance = float(distance)
        self.required = float(required)
        super().__init__(
            f"{first} and {second} are {self.distance:.6g} m apart "
            f"(required >= {self.required:.6g} m)"
        )


class DegenerateGeometry(ValidationError):
    pass


class PointOutsideDomain(EISError):
    pass


class UnknownModel(EISError):
    pass


class MeshBudgetExceeded(EISError):
    pass


class InfeasibleResolution(EISError):
    pass


class SingularSystem(EISError):
    pass


class NonConvergence(EISError):
    pass


class MeshNotInterfaceReady(EISError):
    pass


class MeshMismatch(EISError):
    pass


class DegenerateContrast(EISError):
    pass


class NotASegment(EISError):
    pass


class CoincidentPoints(EISError):
    pass


class NonUniformSampling(EISError):
    pass


class ZeroLambda(EISError):
    pass


class OnBranchCut(EISError):
    pass


class AtPole(EISError):
    pass


class MissingFluxData(EISError):
    pass


class RankDeficient(EISError):
    pass


class PoleOutsideCircle(EISError):
    pass


class ShapeMismatch(EISError):
    pass


class NonPositiveAlpha(EISError):
    pass
