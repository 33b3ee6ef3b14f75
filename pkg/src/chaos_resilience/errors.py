"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible dimensions; we never broadcast silently."""


class GuardExceededError(RuntimeError):
    """An exhaustive or enumerative routine refused an instance above its budget."""


class TensorFormatError(ValueError):
    """A tensor file or dict payload failed validation."""


class DegenerateChaosError(ValueError):
    """The quadratic form is constant on the sign cube (normalizes to zero)."""
