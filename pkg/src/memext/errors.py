"""Exception hierarchy shared across the toolkit."""


class MemextError(Exception):
    """Base class for all toolkit errors."""


class DataError(MemextError):
    """Malformed or inconsistent input data (documents, manifests, audit files)."""


class SamplingError(DataError):
    """Raised when example extraction from a document fails."""


class InsufficientWidthError(ValueError, MemextError):
    """Top-k truncation asked for more entries than a sparse logit row carries."""


class UnextractableError(ValueError, MemextError):
    """An operation that needs p_z > 0 was given an unextractable example."""


class ProviderError(MemextError):
    """A model backend failed to answer a request."""

    def __init__(self, message, status=None, body=None):
        super().__init__(message)
        self.status = status
        self.body = body


class BackendUnavailable(ProviderError):
    """The backend could not be reached at all."""


class ContextLengthError(ProviderError):
    """The request context is longer than the backend accepts."""

    def __init__(self, message, limit, status=None, body=None):
        super().__init__(message, status=status, body=body)
        self.limit = limit


class ProtocolError(ProviderError):
    """The backend answered with a payload that does not follow the wire format."""
