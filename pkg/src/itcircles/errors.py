"""Exception types raised by the detection pipeline."""


class InvalidParameterError(ValueError):
    """A parameter violates its documented precondition."""


class CollinearError(ValueError):
    """Three points are (numerically) collinear; no circle passes through them."""


class NoIntersectionError(ValueError):
    """Two gradient lines are parallel and have no intersection."""


class DegenerateChordError(ValueError):
    """Two chords have parallel perpendicular bisectors."""


class UndefinedReferenceError(ValueError):
    """A PSNR reference accumulator carries no signal."""


class InvalidSpecError(ValueError):
    """A scene specification is malformed or places shapes out of bounds."""
