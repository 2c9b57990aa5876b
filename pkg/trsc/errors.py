"""
Exceptions raised by the TRS-C library
"""


class TrscError(Exception):
    """Base class for every library error"""


class NonSymmetric(TrscError):
    """H is not symmetric within tolerance"""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"matrix is not symmetric (||H - H^T|| = {residual:.3e})")


class PoleAt(TrscError):
    """Evaluation requested at a pole of the secular function"""

    def __init__(self, mu: float):
        self.mu = mu
        super().__init__(f"secular function has a pole at mu = {mu!r}")


class OutOfDomain(TrscError):
    """Argument outside the domain of a convex scalar function"""

    def __init__(self, y, domain):
        self.y = y
        self.domain = domain
        super().__init__(f"y = {y!r} outside domain {domain}")


class NoPreimage(TrscError):
    """t is outside the range of f0' on its domain"""

    def __init__(self, t, range_):
        self.t = t
        self.range = range_
        super().__init__(f"t = {t!r} outside range {range_} of the first derivative")


class InnerNoConverge(TrscError):
    """Inner Newton for y(mu) did not converge"""


class ConvexInstance(TrscError):
    """H is positive semidefinite; use a convex method"""


class DimensionMismatch(TrscError):
    pass


class DegenerateG1(TrscError):
    """g_1 vanishes; the tangent basis W(mu) is undefined"""


class NotPositiveDefinite(TrscError):
    pass


class BracketFailure(TrscError):
    """A sign change of the secular gap could not be bracketed"""


class BadSequence(TrscError):
    """Root sequence, lines or blend radius violate the construction"""


class PhiNotIncreasing(BadSequence):
    pass


class NonMonotonePsi(BadSequence):
    pass


class InstanceFormatError(TrscError):
    """Instance or candidate file cannot be parsed or validated"""


class InvalidInstance(TrscError):
    """Problem data violate an instance invariant"""
