"""Exception hierarchy shared by all modules."""


class ASDSMError(Exception):
    """Base class for every error raised by this package."""


class MeshError(ASDSMError):
    pass


class DivisibilityError(MeshError):
    pass


class DegenerateError(MeshError):
    pass


class IndexOutOfRange(MeshError):
    pass


class NotASubmesh(MeshError):
    pass


class InvalidKind(ASDSMError):
    pass


class DimensionMismatch(ASDSMError):
    pass


class SingularMatrix(ASDSMError):
    def __init__(self, message: str, hole: tuple[int, ...] | None = None):
        super().__init__(message)
        self.hole = hole


class SkeletonNotHollow(ASDSMError):
    pass


class ZeroNormSolution(ASDSMError):
    pass


class UnknownExample(ASDSMError):
    pass


class NoExactSolution(ASDSMError):
    pass
