"""Exception hierarchy shared by all modules."""


class WLLError(Exception):
    """Base class for every error raised by the package."""


class NotClosed(WLLError):
    pass


class NonSimple(WLLError):
    pass


class OrientationError(WLLError):
    pass


class PointOnContour(WLLError):
    pass


class SingularityCrossed(WLLError):
    pass


class ChartOverflow(WLLError):
    pass


class Coincident(WLLError):
    pass


class LightConeSingularity(WLLError):
    pass


class UnsupportedGroup(WLLError):
    pass


class NotScalar(WLLError):
    pass


class BadMatching(WLLError):
    pass


class CapExceeded(WLLError):
    pass


class InconsistentInput(WLLError):
    pass


class Unsupported(WLLError):
    pass


class NotACircle(WLLError):
    pass


class NotSymmetricDensity(WLLError):
    pass
