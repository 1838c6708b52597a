"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 3); numerical
breakdowns derive from :class:`NumericalError` (exit code 4).
"""


class KoopreachError(Exception):
    pass


class InputError(KoopreachError, ValueError):
    pass


class NumericalError(KoopreachError, ArithmeticError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class SingularJacobianError(NumericalError):
    pass


class CapacityError(InputError):
    pass


class ConditioningError(NumericalError):
    pass


class DecompositionError(NumericalError):
    pass


class SelectionError(NumericalError):
    def __init__(self, message: str, best_residuals=()):
        super().__init__(message)
        self.best_residuals = list(best_residuals)


class InfeasibleRegionError(InputError):
    def __init__(self, message: str, rate: float):
        super().__init__(message)
        self.rate = rate


class DegenerateEigenfunctionError(NumericalError):
    pass


class BranchMismatchError(InputError):
    pass


class HorizonTooLongError(InputError):
    pass


class BudgetUndefinedError(NumericalError):
    pass
