"""Exception hierarchy shared across the package."""


class SheLoraError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(SheLoraError, ValueError):
    """Operand dimensions are incompatible."""


class ValidationError(SheLoraError, ValueError):
    """An argument violates an operation's precondition."""


class DomainError(SheLoraError, ValueError):
    """Input contains non-finite values."""


class CapacityError(SheLoraError):
    """A block does not fit in the ciphertext slot capacity."""


class IncompatibleError(SheLoraError):
    """Ciphertexts differ in shape, parameters or level."""


class DepthError(SheLoraError):
    """Multiplicative depth of a ciphertext is exhausted."""


class AuthenticationError(SheLoraError):
    """A ciphertext was opened with a key it was not produced under."""


class TrainingError(SheLoraError):
    """Local training diverged."""

    def __init__(self, message, losses=None):
        super().__init__(message)
        self.losses = list(losses or [])
