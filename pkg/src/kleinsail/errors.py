"""Exception hierarchy shared by all kleinsail modules."""


class KleinError(Exception):
    """Base class for every error raised by the package."""


class PrecisionExhausted(KleinError):
    """An enclosure still straddles zero at the maximum precision budget."""


class DegenerateForm(KleinError):
    """A linear form vanishes at a nonzero integer point where that is not allowed."""


class InsufficientDepth(KleinError):
    pass


class EmptyRange(KleinError):
    pass


class ParallelEdges(KleinError):
    pass


class HullDegeneracy(KleinError):
    """All points are coplanar (or collinear), so no 3D hull exists."""


class UncertifiedVertex(KleinError):
    pass


class NoCertifiedVertices(KleinError):
    pass


class ZeroCoordinate(KleinError):
    pass


class PerturbationTooLarge(KleinError):
    pass


class ParseError(KleinError, ValueError):
    pass
