"""Exception types raised across the package."""


class HedgehogError(Exception):
    pass


class ConfigError(HedgehogError):
    pass


class NonConvergence(HedgehogError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class NonMonotone(HedgehogError):
    pass


class GridMismatch(HedgehogError):
    pass


class IndexOutOfRange(HedgehogError):
    pass


class EigenFailure(HedgehogError):
    pass


class DegenerateMode(HedgehogError):
    pass


class SingularEigenvalue(HedgehogError):
    pass


class LengthMismatch(HedgehogError):
    pass


class SingularWeight(HedgehogError):
    pass


class FactorizationBreakdown(HedgehogError):
    pass


class NoSignChange(HedgehogError):
    def __init__(self, msg, reports=None):
        super().__init__(msg)
        self.reports = reports


class NonPositivePsi(HedgehogError):
    pass
