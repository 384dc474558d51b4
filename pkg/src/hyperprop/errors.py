"""Exception hierarchy shared by every module."""


class HyperpropError(Exception):
    """Base class for all toolkit errors."""


class InvalidSample(HyperpropError, ValueError):
    pass


class InvalidColor(HyperpropError, ValueError):
    pass


class EnumerationTooLarge(HyperpropError):
    """An exhaustive enumeration would exceed the configured guard."""

    def __init__(self, what, size, guard):
        self.what = what
        self.size = size
        self.guard = guard
        super().__init__(f"{what}: {size} items exceeds guard {guard}")


class RangeError(HyperpropError, ValueError):
    pass


class IncompatibleKernels(HyperpropError, ValueError):
    pass


class NonTermination(HyperpropError):
    """An iterative procedure hit its proven iteration cap."""


class FormatError(HyperpropError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
