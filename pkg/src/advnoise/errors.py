"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible dimensions."""


class ParameterError(ValueError):
    """A parameter is outside its documented domain."""


class ParseError(ValueError):
    """A flat file could not be parsed; message carries the line number."""


class NumericError(ArithmeticError):
    """A numeric result left the finite range (NaN/Inf), e.g. training divergence."""
