class GroupFormError(ValueError):
    """Base error for invalid inputs or states. The message is one line."""


class RecordError(GroupFormError):
    pass


class DegenerateGraphError(GroupFormError):
    pass


class MetricUndefinedError(GroupFormError):
    pass


class NoSelectableEdgeError(GroupFormError):
    pass


class BufferUnderfilledError(GroupFormError):
    pass


class CapacityExceededError(GroupFormError):
    pass
