"""Exception hierarchy shared by all modules."""


class GeometryError(ValueError):
    pass


class PointOutsideDomain(GeometryError):
    pass


class DegenerateMetric(GeometryError):
    pass


class SignatureMismatch(GeometryError):
    pass


class NullSeedField(GeometryError):
    pass


class NullField(GeometryError):
    pass


class DegeneratePlane(GeometryError):
    pass


class NotLightlike(GeometryError):
    pass


class DegenerateSpan(GeometryError):
    pass


class WrongRank(GeometryError):
    pass


class DegenerateHypersurface(GeometryError):
    pass


class ForbiddenParameter(GeometryError):
    pass


class NonUnitField(GeometryError):
    pass


class NegativeSpeedSquared(GeometryError):
    pass


class UnknownManifold(KeyError):
    pass


class UnknownIdentity(KeyError):
    pass


class SinkUnwritable(OSError):
    pass
