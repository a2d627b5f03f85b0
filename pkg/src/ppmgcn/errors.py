"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`PPMError`,
and carries the process exit code the command line maps it to.
"""


class PPMError(Exception):
    exit_code = 2


class SchemaError(PPMError, ValueError):
    """A required column is missing from the input header."""


class TimestampError(PPMError, ValueError):
    def __init__(self, line: int, value: str, fmt: str):
        self.line = line
        self.value = value
        super().__init__(f"line {line}: cannot parse timestamp {value!r} with format {fmt!r}")


class EmptyLogError(PPMError, ValueError):
    pass


class SplitError(PPMError, ValueError):
    pass


class SingularDegreeError(PPMError, ValueError):
    def __init__(self, node: int):
        self.node = node
        super().__init__(f"node {node} has zero degree; normalization undefined")


class ShapeError(PPMError, ValueError):
    pass


class ParameterError(PPMError, ValueError):
    pass


class LabelError(PPMError, IndexError):
    pass


class RangeError(PPMError, ValueError):
    pass


class UsageError(PPMError):
    exit_code = 1


class ConfigError(PPMError):
    exit_code = 1


class NumericError(PPMError, FloatingPointError):
    exit_code = 3
