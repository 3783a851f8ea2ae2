"""Exception hierarchy shared by every pqchain module."""


class PqchainError(Exception):
    """Base class for all domain errors raised by pqchain."""


class UnsupportedScheme(PqchainError):
    pass


class BackendFailure(PqchainError):
    pass


class EmptyKey(PqchainError):
    pass


class ZeroAmount(PqchainError):
    pass


class InsufficientFunds(PqchainError):
    def __init__(self, available: int, requested: int):
        super().__init__(f"insufficient funds: available {available}, requested {requested}")
        self.available = available
        self.requested = requested


class ForeignInput(PqchainError):
    pass


class UnresolvedInput(PqchainError):
    pass


class DoubleSpend(PqchainError):
    pass


class InvalidTransaction(PqchainError):
    pass


class EmptyBlock(PqchainError):
    pass


class IterationCapExceeded(PqchainError):
    pass


class DegenerateInput(PqchainError):
    pass


class DecodeError(PqchainError):
    """Raised when canonical bytes or a stored file cannot be parsed."""
