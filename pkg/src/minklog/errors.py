"""Exception hierarchy shared by the library and the command line."""


class MinklogError(Exception):
    """Base class for all library errors."""


class ParameterDomainError(MinklogError, ValueError):
    """Density parameters (b, m, n) outside the admissible range."""


class VariationalDomainError(ParameterDomainError):
    """Parameters admit a density but not the variational formulas (b >= m/(n+m))."""


class GeometryError(MinklogError, ValueError):
    pass


class UnboundedBodyError(GeometryError):
    """The directions do not positively span R^n, so the Wulff shape is unbounded."""


class TieError(GeometryError):
    """A ray hits a lower-dimensional face and has no unique facet normal."""


class HemisphereConcentrationError(MinklogError, ValueError):
    """The measure is concentrated in a closed hemisphere."""

    def __init__(self, direction, message: str | None = None):
        self.direction = tuple(float(v) for v in direction)
        text = "measure concentrated in a closed hemisphere"
        vec = ", ".join(f"{v:.6g}" for v in self.direction)
        super().__init__(message or f"{text} (direction v = ({vec}))")


class ToleranceNotMetError(MinklogError, ArithmeticError):
    """Adaptive quadrature ran out of subdivisions before meeting its tolerance."""


class InactiveFacetError(GeometryError):
    pass


class ConstraintBracketError(MinklogError, ValueError):
    pass
