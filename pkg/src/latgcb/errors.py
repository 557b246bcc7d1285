"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(ValueError):
    """An exact instance would exceed the enumeration cap."""


class SolverError(RuntimeError):
    """A numerical solver failed to return a usable answer."""
