"""Exception types raised across the package."""

import numpy as np


class MorcertError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(MorcertError, ValueError):
    pass


class InvalidMatrix(MorcertError, ValueError):
    """Non-finite or malformed matrix data."""


class SingularShift(MorcertError, np.linalg.LinAlgError):
    """sI - A is numerically singular at the requested frequency."""


class EigFailure(MorcertError, np.linalg.LinAlgError):
    pass


class SvdFailure(MorcertError, np.linalg.LinAlgError):
    pass


class RankDeficient(MorcertError, ValueError):
    pass


class ObliqueAngle(MorcertError, ValueError):
    """Two subspaces meet at a right angle, so no bi-orthogonal pairing exists."""


class UnstableA(MorcertError, ValueError):
    pass


class ResidualTooLarge(MorcertError, ArithmeticError):
    pass


class NotPSD(MorcertError, ValueError):
    pass


class ConditionFailed(MorcertError, ValueError):
    """The Lyapunov perturbation bound needs eta < 1."""

    def __init__(self, eta):
        self.eta = float(eta)
        super().__init__(f"perturbation condition failed: eta = {self.eta:.6g} >= 1")


class DegenerateGap(MorcertError, ValueError):
    pass


class RankCollapse(MorcertError, ValueError):
    pass


class HypothesisViolated(MorcertError, ValueError):
    def __init__(self, name, value, message=None):
        self.name = name
        self.value = float(value)
        super().__init__(message or f"hypothesis violated: {name} = {self.value:.6g}")


class SubspaceSwap(MorcertError, ArithmeticError):
    pass


class EtaTooLarge(MorcertError, ValueError):
    def __init__(self, index, eta):
        self.index = int(index)
        self.eta = float(eta)
        super().__init__(f"eta{self.index} = {self.eta:.6g} is not below 1/2")


class TraceMismatch(MorcertError, ArithmeticError):
    pass


class GenerationFailed(MorcertError, RuntimeError):
    pass


class BoundViolation(MorcertError, AssertionError):
    """A numerically checked inequality failed where it must hold."""
