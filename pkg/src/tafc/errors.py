"""Exception hierarchy shared across the package."""


class TafcError(Exception):
    """Base class for every error raised by this package."""


# schema parsing / validation
class SchemaError(TafcError):
    pass


class MissingName(SchemaError):
    pass


class MalformedParameters(SchemaError):
    pass


class UnsupportedKind(SchemaError):
    pass


class UnknownParameter(TafcError, KeyError):
    pass


class UnknownTarget(TafcError, KeyError):
    pass


# filtering
class MalformedReasoningTuple(TafcError):
    def __init__(self, path: str, message: str = ""):
        self.path = path
        super().__init__(message or f"reasoning tuple at {path!r} has no 'value' member")


class UnknownFunction(TafcError, KeyError):
    pass


# gateway
class UpstreamError(TafcError):
    pass


class UpstreamUnreachable(UpstreamError):
    pass


class UpstreamTimeout(UpstreamError):
    pass


class BudgetExhausted(TafcError):
    def __init__(self, session: str, limit: int):
        self.session = session
        self.limit = limit
        super().__init__(f"session {session!r} exhausted its budget of {limit} tool calls")


# trace store
class StorageError(TafcError):
    pass


class StorageFull(StorageError):
    pass


class IOFailure(StorageError):
    pass


# tuning
class EmptyText(TafcError, ValueError):
    pass


class ZeroVector(TafcError, ValueError):
    pass


class ProviderFailure(TafcError):
    pass


class SchemaMismatch(TafcError, ValueError):
    pass


class EmptyTaskSet(TafcError, ValueError):
    pass


class EmptyCandidateWarning(UserWarning):
    """The refinement provider returned a blank candidate; the current text is kept."""


# harness
class ScenarioInvalid(TafcError, ValueError):
    pass
