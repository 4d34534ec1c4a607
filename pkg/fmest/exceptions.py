"""Exceptions raised by fmest.

Every class derives from the builtin exception a caller would catch anyway,
so ``except ValueError`` keeps working around fmest calls.
"""

__all__ = [
    'DomainError', 'MachineParseError', 'NumericalError', 'StructuralError'
]


class DomainError(ValueError):
    """A parameter lies outside its admissible range."""


class StructuralError(ValueError):
    """A state index is invalid or a machine lacks the required structure."""


class MachineParseError(ValueError):
    """A machine document is malformed.

    Parameters
    ----------
    field : str
        Name of the offending field.

    message : str
        Description of the problem.
    """

    def __init__(self, field, message):
        super().__init__(f'{field}: {message}')

        self.field = field


class NumericalError(ArithmeticError):
    """A solver did not reach its residual tolerance.

    Parameters
    ----------
    message : str
        Description of the problem.

    residual : float, default None
        Residual reached by the solver.
    """

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f'{message} (residual {residual:.3e})'

        super().__init__(message)

        self.residual = residual
