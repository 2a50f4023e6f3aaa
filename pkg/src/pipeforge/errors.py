"""Exception taxonomy shared by every pipeforge module.

Each error carries a short machine-readable ``kind`` (used by the CLI and
the HTTP service to report structured errors) plus a human message.
"""


class PipeforgeError(Exception):
    """Base class for every domain error raised by this package."""

    kind = "Error"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": str(self)}


class ManifestSyntaxError(PipeforgeError):
    kind = "SyntaxError"


class SchemaError(PipeforgeError):
    kind = "SchemaError"


class InvariantError(PipeforgeError):
    kind = "InvariantError"


class DuplicateError(PipeforgeError):
    kind = "DuplicateError"


class BindingError(PipeforgeError):
    kind = "BindingError"


class NotFoundError(PipeforgeError):
    kind = "NotFound"


class UnknownParamError(PipeforgeError):
    kind = "UnknownParam"


class TypeMismatchError(PipeforgeError):
    kind = "TypeMismatch"


class RangeViolationError(PipeforgeError):
    kind = "RangeViolation"


class DuplicateInstanceIdError(PipeforgeError):
    kind = "DuplicateInstanceId"


class ScopeError(PipeforgeError):
    kind = "ScopeError"


class ChainError(PipeforgeError):
    kind = "ChainError"


class UnknownInstanceError(PipeforgeError):
    kind = "UnknownInstance"


class PluginFailureError(PipeforgeError):
    kind = "PluginFailure"


class KindError(PipeforgeError):
    kind = "KindError"


class ShapeError(PipeforgeError):
    kind = "ShapeError"


class ProtocolError(PipeforgeError):
    kind = "ProtocolError"


class FormatError(PipeforgeError):
    kind = "FormatError"


class EmptyNoiseBankError(PipeforgeError):
    kind = "EmptyNoiseBank"


class EmptyDatasetError(PipeforgeError):
    kind = "EmptyDataset"


class DuplicateKeywordError(PipeforgeError):
    kind = "DuplicateKeyword"


class DegenerateDataError(PipeforgeError):
    kind = "DegenerateData"


class NonFiniteError(PipeforgeError):
    kind = "NonFinite"


class EmptySplitError(PipeforgeError):
    kind = "EmptySplit"


class StoreError(PipeforgeError):
    kind = "StoreError"


class IllegalTransitionError(PipeforgeError):
    kind = "IllegalTransition"


class UnknownMetricError(PipeforgeError):
    kind = "UnknownMetric"


class UnknownRunError(PipeforgeError):
    kind = "UnknownRun"
