"""Exceptions and warnings raised by :mod:`sympres`."""


class SympresError(Exception):
    """Base class for all errors raised by this package."""


class InfeasibleConstraints(SympresError, ValueError):
    """The spline constraints are inconsistent or leave no freedom."""


class RankDeficientWarning(UserWarning):
    """The reduced least-squares system did not have full column rank."""


class DegenerateMapping(SympresError, ValueError):
    """The grid mapping has a nonpositive Jacobian determinant."""


class NonPositiveWeight(SympresError, ValueError):
    """An integration weight is not strictly positive."""


class ZeroReference(SympresError, ValueError):
    """The reference field has zero norm."""


class UnstableRun(SympresError, RuntimeError):
    """Time integration produced values beyond the stability threshold."""


class ConfigError(SympresError, ValueError):
    """An experiment configuration could not be parsed."""
