"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class TruncationError(ValueError):
    """Fock-space cutoff too small for the requested amplitudes."""


class DegenerateStateError(ArithmeticError):
    """A state vector with zero norm where a physical state was expected."""


class ImaginaryResidueError(ArithmeticError):
    """An expectation value that must be real came out complex."""
