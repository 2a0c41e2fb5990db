"""Exception types raised by dc_split."""


class DCSplitError(ValueError):
    """Base class for all input and domain errors."""


class DegenerateError(DCSplitError):
    pass


class DomainError(DCSplitError):
    pass


class MeshMismatchError(DCSplitError):
    pass


class ConvexityError(DCSplitError):
    pass
