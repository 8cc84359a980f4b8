"""Exception types for structurally invalid inputs and reportable error states."""


class DimensionMismatchError(ValueError):
    """Operands live on spaces of different dimension."""


class ValidationError(ValueError):
    """A structural invariant of a domain type is violated."""


class EmptyShellError(ValueError):
    """An energy window contains no eigenvalue."""


class NonCommutingFamilyError(ValueError):
    """A supposedly commuting observable family has a large commutator."""


class ShellLeakageError(ValueError):
    """An observable does not commute with the shell projection."""


class EquilibriumTieError(ValueError):
    """Two macro-sectors tie for the dominant one; not silently broken."""


class EmptySpectralWindowError(ValueError):
    """A spectral window around the thermal value contains no eigenvalue."""


class DegenerateSpectrumError(ValueError):
    """Repeated eigenvalues where a construction requires distinct ones."""


class ConfigError(ValueError):
    """Invalid or unknown experiment configuration."""
