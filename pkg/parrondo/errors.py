"""Exception hierarchy for the Parrondo lattice engine."""


class ParrondoError(Exception):
    """Base class for all engine errors."""


class DomainError(ParrondoError, ValueError):
    """Input outside the domain of an operation (bad site, size, ε, block size)."""


class UnsupportedBoundary(DomainError):
    """p1, p2 or p3 is 0 or 1 and no reducible case covers the vector."""


class RegimeNotErgodic(DomainError):
    """The chain has no unique aperiodic recurrent class."""


class MeanUndefined(RegimeNotErgodic):
    """Both the all-zeros and the all-ones state are absorbing (p0 = 0, p4 = 1)."""

    def __init__(self, detail: str = "") -> None:
        message = "mean undefined"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


# Simulation code raises the same class when asked to play an undefined regime.
RegimeUndefined = MeanUndefined


class CapacityExceeded(ParrondoError):
    """The lattice is too large for full enumeration or the exact path."""


class ConvergenceError(ParrondoError):
    """An iterative solve stopped above the warning tolerance."""
