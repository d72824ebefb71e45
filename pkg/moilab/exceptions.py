"""
moilab.exceptions
~~~~~~~~~~~~~~~~~

This module contains the moilab exceptions.

"""
from typing import Any


class MoiLabException(Exception):
    """There was an unlabeled numerical or input error"""
    def __init__(self, code: Any, raw: Any = None) -> None:
        super().__init__(code)
        self.code = code
        self.raw = raw

    def __str__(self) -> str:
        return str(self.code)


class NotHermitian(MoiLabException):
    """Matrix violates the conjugate-transpose symmetry tolerance."""


class EigFailure(MoiLabException):
    """The eigensolver did not converge."""


class DomainViolation(MoiLabException):
    """A spectral point lies outside the domain of the function."""


class OrderExceeded(MoiLabException):
    """A derivative beyond the declared maximal order was requested."""


class DimensionMismatch(MoiLabException):
    """Operand dimensions do not agree."""


class NotPositive(MoiLabException):
    """Weight operator is not positive definite."""


class InsufficientDims(MoiLabException):
    """Too few truncation dimensions for an order estimate."""


class Unbounded(MoiLabException):
    """A seminorm grows without bound towards the end of its interval."""


class BadIndex(MoiLabException):
    """Slot index out of range for the selected identity."""


class DegenerateFit(MoiLabException):
    """The regression data cannot support a slope fit."""


class BlowupGuard(MoiLabException):
    """The number of expansion terms exceeds the guard."""


class SpectralGapViolation(MoiLabException):
    """An eigenvalue sits too close to zero for |x| to be smooth."""


class TailTooFat(MoiLabException):
    """Truncated series tail is not negligible for the requested t."""


class DivergentRegion(MoiLabException):
    """Dirichlet series evaluated outside its convergence region."""


class RangeGuard(MoiLabException):
    """Argument above the supported range."""


class QuadratureStall(MoiLabException):
    """Adaptive quadrature exhausted its panel budget."""


class SingularResolvent(MoiLabException):
    """A quadrature node landed on the spectrum."""


class SingularZ(MoiLabException):
    """Resolvent requested on the real axis."""


class SpectrumTooLow(MoiLabException):
    """Spectrum too close to zero for log or fractional powers."""


class ConfigInvalid(MoiLabException):
    """Experiment configuration failed validation."""
