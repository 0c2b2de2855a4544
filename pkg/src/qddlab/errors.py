"""Exception hierarchy for qddlab."""


class QddError(Exception):
    """Base class for all qddlab errors."""


# --- linear algebra ---------------------------------------------------------

class BadDimension(QddError):
    """Matrix has the wrong shape for the requested operation."""


class NotHermitian(QddError):
    """Input failed the Hermiticity tolerance check."""


class NoConvergence(QddError):
    """Iterative eigensolver exceeded its sweep limit."""


# --- bath / Hamiltonian model -----------------------------------------------

class InvalidBathSize(QddError):
    """Bath must contain at least two qubits."""


class DegenerateBath(QddError):
    """A raw bath block has zero spectral norm and cannot be rescaled."""


# --- sequence grammar & compilation -----------------------------------------

class SequenceSyntaxError(QddError):
    """Malformed sequence text; carries the offending position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class AdjacentAxisError(QddError):
    """Two adjacent nesting levels use the same pulse axis."""


class OrderError(QddError):
    """Sequence order must be a positive integer."""


class InvalidOrder(OrderError):
    """Pulse-timing fractions are undefined for orders below one."""


# --- evolution & metrics ----------------------------------------------------

class PrecisionExhausted(QddError):
    """A unitarity residual exceeded tolerance; raise the digit count."""


class MissingCheckpoint(QddError):
    """Evolution result does not carry the requested checkpoint."""


# --- sweeps & fitting --------------------------------------------------------

class TooFewPoints(QddError):
    """Slope fitting needs at least four grid points."""


class DegenerateFit(QddError):
    """All data sit at or below the roundoff floor; slope is meaningless."""


class IncompleteSweep(QddError):
    """Sweep result does not cover the requested cells."""
