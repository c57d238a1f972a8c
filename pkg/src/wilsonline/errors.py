"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed input: bad shapes, out-of-domain parameters, invalid files."""


class DomainError(ValidationError):
    """A parameter lies outside the domain of the operation."""


class InvariantViolation(ArithmeticError):
    """Two routes that must agree numerically did not."""
