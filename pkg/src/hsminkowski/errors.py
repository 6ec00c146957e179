"""Exception hierarchy shared by every layer of the engine."""


class GeometryError(Exception):
    """Base class for all engine errors."""


class DomainViolation(GeometryError):
    """A chart point lies outside the chart domain or too close to its excluded locus."""


class NotPositiveDefinite(GeometryError):
    """The metric failed the positive-definiteness guard."""


class RankDeficient(GeometryError):
    """The immersion Jacobian lost rank at some parameter point."""


class SymmetryDefectTooLarge(GeometryError):
    """The shape operator came out too far from symmetric."""


class NotAPositionField(GeometryError):
    """A position-field check was requested on a field that does not claim it."""


class GateViolation(GeometryError):
    """An identity was requested on a scene that fails its applicability gate."""

    def __init__(self, identity, gate, detail=""):
        self.identity = identity
        self.gate = gate
        self.detail = detail
        msg = f"GateViolation({identity}: {gate})"
        if detail:
            msg += f" {detail}"
        super().__init__(msg)


class DegenerateScene(GeometryError):
    """All terms of an identity vanish, so a relative residual is meaningless."""


class ConfigError(GeometryError):
    """Malformed or inconsistent scene/configuration input."""


class IndexOutOfRange(GeometryError, IndexError):
    """Mean-curvature degree outside the admissible range."""
