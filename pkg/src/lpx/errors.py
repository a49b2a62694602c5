"""Exception types shared across the package.

Every error carries an ``exit_code`` used by the command-line front end.
"""


class LpxError(Exception):
    exit_code = 3


class ParseError(LpxError, ValueError):
    exit_code = 2


class DimensionMismatch(LpxError, ValueError):
    exit_code = 2


class NonCommuting(LpxError):
    exit_code = 3


class IrrationalSpectrum(LpxError):
    exit_code = 3


class NotNilpotent(LpxError):
    exit_code = 3


class BlockSplitFailed(LpxError):
    exit_code = 3


class NotSolvable(LpxError):
    exit_code = 3


class NotSemidirect(LpxError):
    exit_code = 3


class NotApplicable(LpxError):
    exit_code = 3


class UnknownCase(LpxError):
    exit_code = 4


class SolvabilityFailed(LpxError):
    exit_code = 5


class CoextConditionFailed(LpxError):
    exit_code = 5


class IndexOutOfRange(LpxError, IndexError):
    exit_code = 2


class NotSemisimple(LpxError):
    exit_code = 3


class NonFinite(LpxError, ArithmeticError):
    exit_code = 6

    def __init__(self, msg, step=None):
        super().__init__(msg)
        self.step = step


class BadParameter(LpxError, ValueError):
    exit_code = 2


class AllResonant(LpxError):
    exit_code = 7


class InvalidTensor(LpxError, ValueError):
    exit_code = 1
