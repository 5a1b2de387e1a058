"""Exception hierarchy.

Three families map onto the CLI exit codes: bad inputs (2), numerical
failures (3) and integrity failures (4).
"""


class SeasonalVoltageError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class InputError(SeasonalVoltageError, ValueError):
    exit_code = 2


class ParseError(InputError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class StructuralError(InputError):
    pass


class EmptyInputError(InputError):
    pass


class ConflictError(InputError):
    pass


class VocabularyError(InputError):
    pass


class RangeError(InputError):
    pass


class CaseReferenceError(InputError):
    pass


class ConnectivityError(InputError):
    def __init__(self, message, islands=()):
        self.islands = [sorted(i) for i in islands]
        super().__init__(message)


class InsufficientDataError(InputError):
    pass


class CoverageError(InputError):
    pass


class DegenerateDataError(InputError):
    pass


class ArgumentError(InputError):
    pass


class NumericalError(SeasonalVoltageError, ArithmeticError):
    exit_code = 3


class DivergedError(NumericalError):
    def __init__(self, message, trace=()):
        self.trace = list(trace)
        super().__init__(message)


class SingularJacobianError(NumericalError):
    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class InfeasibleDispatchError(NumericalError):
    def __init__(self, message, slot=None):
        self.slot = slot
        super().__init__(message)


class InfeasibleSelectionError(NumericalError):
    pass


class DegenerateProfileError(NumericalError):
    def __init__(self, message, season=None, slot=None):
        self.season = season
        self.slot = slot
        super().__init__(message)


class IntegrityError(SeasonalVoltageError):
    exit_code = 4
