"""Exception hierarchy. Each class carries the CLI exit code and a short error tag."""


class RotkickError(Exception):
    exit_code = 1
    code = "ERROR"


class InvalidSpecError(RotkickError, ValueError):
    exit_code = 2
    code = "INVALID_SPEC"


class InvalidArgumentError(RotkickError, ValueError):
    exit_code = 2
    code = "INVALID_ARGUMENT"


class ConfigError(RotkickError, ValueError):
    exit_code = 2
    code = "CONFIG_ERROR"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class JmaxTooSmallError(RotkickError, ValueError):
    exit_code = 3
    code = "JMAX_TOO_SMALL"

    def __init__(self, message, suggested_jmax):
        super().__init__(f"{message} (suggested Jmax >= {suggested_jmax})")
        self.suggested_jmax = suggested_jmax


class NumericalFailure(RotkickError, ArithmeticError):
    exit_code = 3
    code = "NUMERICAL_FAILURE"


class NoCombFoundError(RotkickError):
    exit_code = 4
    code = "NO_COMB_FOUND"


class UnresolvedPeaksError(RotkickError):
    exit_code = 4
    code = "UNRESOLVED"


class NoOptimumError(RotkickError):
    exit_code = 4
    code = "NO_OPTIMUM"
