__title__ = 'moilab'
__version__ = "0.1.0"
__author__ = 'moilab developers'
__license__ = 'LGPL v2.1'

from .functions import SymbolFunction
from .spectral import HermitianOperator, SpectralDecomposition
from .sobolev import WeightOperator, TruncationFamily
from .moi import MoiProblem
from .expansion import ExpansionResult, MultiIndex, OrderFit
from .heat import SpectralTripleModel
from .hs import AlmostAnalyticExtension, QuadratureSpec
from .config import LabSettings

__all__ = ("SymbolFunction", "HermitianOperator", "SpectralDecomposition", "WeightOperator", "TruncationFamily",
           "MoiProblem", "ExpansionResult", "MultiIndex", "OrderFit", "SpectralTripleModel",
           "AlmostAnalyticExtension", "QuadratureSpec", "LabSettings")
