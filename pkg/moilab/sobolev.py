"""
moilab.sobolev
~~~~~~~~~~~~~~

The Sobolev scale H^s of a positive weight operator Theta: norms, operator
norms between levels, symbol seminorms, analytic-order estimates and adjoints
with respect to the scale.

"""
import logging
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, Final

import numpy as np
import scipy.integrate

from .exceptions import DimensionMismatch, InsufficientDims, NotPositive, OrderExceeded, Unbounded
from .functions import SymbolFunction
from .report import AttributeMixin
from .spectral import HermitianOperator, SpectralDecomposition, as_hermitian, as_matrix, check_domain
from .utils import jbracket, ordered_map

log: Final = logging.getLogger(__name__)

SUP_START_POINTS: Final = 1024
SUP_MAX_POINTS: Final = 2 ** 20
SLOPE_TOL: Final = 0.05


class WeightOperator:
    theta: HermitianOperator
    min_eig: float

    def __init__(self, theta: Any) -> None:
        self.theta = as_hermitian(theta)
        spec = self.theta.spectral
        self.min_eig = float(spec.eigenvalues[0])
        if self.min_eig <= 0:
            raise NotPositive('weight operator has eigenvalue %g <= 0' % self.min_eig, raw=self.min_eig)
        entries = self.theta.entries
        self._diagonal = None
        if not np.any(entries - np.diag(np.diag(entries))):
            self._diagonal = np.diag(entries).real.copy()

    @classmethod
    def diagonal(cls, values: Sequence[float] | np.ndarray) -> 'WeightOperator':
        return cls(HermitianOperator.diagonal(values))

    @property
    def dim(self) -> int:
        return self.theta.dim

    def power(self, s: float) -> np.ndarray:
        if self._diagonal is not None:
            return np.diag(self._diagonal ** s).astype(complex)
        spec = self.theta.spectral
        return (spec.vectors * spec.nodes ** s) @ spec.vectors.conj().T

    def sandwich(self, A: np.ndarray, left: float, right: float) -> np.ndarray:
        '''Theta^left A Theta^right.'''
        if self._diagonal is not None:
            d = self._diagonal
            return (d ** left)[:, None] * A * (d ** right)[None, :]
        return self.power(left) @ A @ self.power(right)

    def check(self, A: np.ndarray) -> np.ndarray:
        A = as_matrix(A)
        if A.shape[-1] != self.dim:
            raise DimensionMismatch('operand of size %s on a scale of dimension %d'
                                    % (A.shape, self.dim), raw=A.shape)
        return A

    def __repr__(self) -> str:
        return '%s (dim=%d, min_eig=%g)' % (self.__class__.__name__, self.dim, self.min_eig)


def sobolev_norm(x: Any, s: float, W: WeightOperator) -> float:
    '''||Theta^s x||_2'''
    v = W.check(np.asarray(x, dtype=complex))
    if v.ndim != 1:
        raise DimensionMismatch('expected a vector, got shape %s' % (v.shape,), raw=v.shape)
    return float(np.linalg.norm(W.power(s) @ v))


def pairing(u: Any, v: Any, s: float, W: WeightOperator) -> complex:
    '''The H^s x H^-s duality <Theta^s u, Theta^-s v>.'''
    a = W.check(np.asarray(u, dtype=complex))
    b = W.check(np.asarray(v, dtype=complex))
    return complex(np.vdot(W.power(-s) @ b, W.power(s) @ a))


def op_norm(A: Any, s: float, r: float, W: WeightOperator) -> float:
    '''Norm of A as a map H^(s+r) -> H^s.'''
    M = W.check(A)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch('operator must be square, got %s' % (M.shape,), raw=M.shape)
    return float(np.linalg.norm(W.sandwich(M, s, -(s + r)), 2))


def flat_adjoint(A: Any, s: float, r: float, W: WeightOperator) -> np.ndarray:
    '''Adjoint of A: H^(s+r) -> H^s with respect to the H^s and H^(s+r)
    inner products, Theta^(-2s-2r) A* Theta^(2s).'''
    M = W.check(A)
    return W.sandwich(M.conj().T, -2 * s - 2 * r, 2 * s)


def delta_power(B: Any, X: Any, m: int) -> np.ndarray:
    '''m-fold iterated commutator [B, [B, ... [B, X]]].'''
    if m < 0:
        raise ValueError('commutator power must be nonnegative')
    b, x = as_matrix(B), as_matrix(X)
    if b.shape != x.shape:
        raise DimensionMismatch('commutator of %s with %s' % (b.shape, x.shape), raw=(b.shape, x.shape))
    for _ in range(m):
        x = b @ x - x @ b
    return x


def weighted_sup_norm(f: SymbolFunction, E: SpectralDecomposition | HermitianOperator, beta: float) -> float:
    '''max over the spectrum of |f(lambda)| <lambda>^(-beta).'''
    spec = E.spectral if isinstance(E, HermitianOperator) else E
    lam = spec.eigenvalues
    check_domain(f, lam)
    return float(np.max(np.abs(f(lam)) * jbracket(lam) ** (-beta)))


def _interval_map(lo: float, hi: float) -> Callable[[np.ndarray], np.ndarray]:
    if math.isinf(lo) and math.isinf(hi):
        return lambda v: np.tan(math.pi * (v - 0.5))
    if math.isinf(hi):
        return lambda v: lo + v / (1.0 - v)
    if math.isinf(lo):
        return lambda v: hi - (1.0 - v) / v
    return lambda v: lo + (hi - lo) * v


def s_beta_seminorm(f: SymbolFunction, beta: float, k: int,
                    interval: tuple[float, float] | None = None, rel_tol: float = 1e-4) -> float:
    '''sup over the interval of |f^(k)(x)| <x>^(k - beta).

    The open interval is sampled on a grid that is doubled until the sup is
    stable to ``rel_tol``.  Raises :class:`Unbounded` when the sampled values
    overflow, or when the sup still grows at the outermost sample once the
    grid budget is spent.
    '''
    lo, hi = f.domain if interval is None else interval
    to_x = _interval_map(lo, hi)
    points = SUP_START_POINTS
    previous = None
    while True:
        v = np.arange(1, points + 1) / (points + 1.0)
        x = to_x(v)
        with np.errstate(over='ignore', invalid='ignore'):
            values = np.abs(f.evaluate(x, k)) * jbracket(x) ** (k - beta)
        where = int(np.nanargmax(values))
        sup = float(values[where])
        growing = previous is not None and sup > previous and where in (0, points - 1)
        if not math.isfinite(sup) or (points >= SUP_MAX_POINTS and growing):
            raise Unbounded('S^%g_%d seminorm of %s grows without bound towards the end of (%g, %g)'
                            % (beta, k, f.name, lo, hi), raw=sup)
        if previous is not None and abs(sup - previous) <= rel_tol * max(sup, 1e-300):
            return sup
        if points >= SUP_MAX_POINTS:
            log.warning('S^%g_%d seminorm of %s not stable to %.1e after %d points',
                        beta, k, f.name, rel_tol, points)
            return sup
        previous = sup
        points *= 2


def t_beta_seminorm(f: SymbolFunction, beta: float, k: int,
                    interval: tuple[float, float] | None = None, rel_tol: float = 1e-6) -> float:
    '''Integral over the interval of |f^(k)(x)| <x>^(k - beta - 1).

    Integrated in u with x = tan u, so infinite ends become finite ones.
    '''
    lo, hi = f.domain if interval is None else interval
    if k > f.max_order:
        raise OrderExceeded('%s has derivatives up to order %d, order %d requested'
                            % (f.name, f.max_order, k), raw=k)

    def integrand(u: float) -> float:
        x = math.tan(u)
        return float(abs(f.evaluate(x, k)) * (1.0 + x * x) ** ((k - beta + 1) / 2.0))

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always', scipy.integrate.IntegrationWarning)
        value, err = scipy.integrate.quad(integrand, math.atan(lo), math.atan(hi),
                                          epsabs=1e-14, epsrel=rel_tol, limit=500)
    for w in caught:
        log.warning('T^%g_%d seminorm of %s: %s', beta, k, f.name, w.message)
    if not math.isfinite(value):
        return math.inf
    log.debug('T^%g_%d seminorm of %s = %.10g (+- %.1e)', beta, k, f.name, value, err)
    return float(value)


@dataclass
class TruncationFamily:
    '''Nested finite truncations (Theta_N, A_N) of one operator pair.'''
    name: str
    builder: Callable[[int], tuple[WeightOperator, np.ndarray]] = field(repr=False)
    dims: list[int]
    nested: bool = True

    def build(self, dim: int) -> tuple[WeightOperator, np.ndarray]:
        return self.builder(dim)


def _diag_family(values: Callable[[int], np.ndarray],
                 power: float) -> Callable[[int], tuple[WeightOperator, np.ndarray]]:
    def build(dim: int) -> tuple[WeightOperator, np.ndarray]:
        d = values(dim)
        return WeightOperator.diagonal(d), np.diag(d ** power).astype(complex)
    return build


def harmonic_position(dim: int) -> np.ndarray:
    '''(a + a*)/sqrt(2) on the first ``dim`` oscillator levels.'''
    ladder = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    return ((ladder + ladder.T) / math.sqrt(2.0)).astype(complex)


def truncation_family(name: str, dims: Sequence[int], params: dict[str, Any] | None = None) -> TruncationFamily:
    '''Built-in families: ``diag_linear`` (Theta = diag(1..N)), ``diag_power``
    (Theta = diag(n^p)), both with A = Theta^power, and ``harmonic``
    (Theta = diag((2n+1)^(1/2)), A = position operator).'''
    params = dict(params or {})
    power = float(params.pop('power', 1.0))
    if name == 'diag_linear':
        builder = _diag_family(lambda n: np.arange(1, n + 1, dtype=float), power)
    elif name == 'diag_power':
        p = float(params.pop('p', 1.0))
        builder = _diag_family(lambda n: np.arange(1, n + 1, dtype=float) ** p, power)
    elif name == 'harmonic':
        def builder(n: int) -> tuple[WeightOperator, np.ndarray]:
            theta = np.sqrt(2.0 * np.arange(n) + 1.0)
            return WeightOperator.diagonal(theta), harmonic_position(n)
    else:
        raise ValueError('unknown truncation family %r' % name)
    if params:
        raise ValueError('unused parameters for %s: %s' % (name, sorted(params)))
    return TruncationFamily(name, builder, sorted(int(d) for d in dims))


class OrderEstimate(AttributeMixin):
    attrs = ['family', 'order', 'bounded_at', 's_probe', 'r_grid', 'slopes']

    def __init__(self, family: str, order: float, bounded_at: float, s_probe: float,
                 r_grid: list[float], slopes: list[float]) -> None:
        self.family = family
        self.order = order
        self.bounded_at = bounded_at
        self.s_probe = s_probe
        self.r_grid = r_grid
        self.slopes = slopes

    def __repr__(self) -> str:
        return '%s %s (order %.3f)' % (self.__class__.__name__, self.family, self.order)


def estimate_analytic_order(family: TruncationFamily, r_grid: Sequence[float] | None = None,
                            s_probe: float = 0.0, slope_tol: float = SLOPE_TOL,
                            n_jobs: int = 1) -> OrderEstimate:
    '''Smallest r on ``r_grid`` for which op_norm(A_N, s_probe, r) stays
    bounded across the family's dimensions.

    Boundedness means a log-log growth slope <= ``slope_tol``.  When at least
    two grid points before it grow, the last two slopes are extrapolated
    linearly to slope zero, which recovers an exact order k between grid
    points for power-law growth N^(k - r).
    '''
    dims = family.dims
    if len(dims) < 4:
        raise InsufficientDims('order estimates need at least 4 dimensions, got %d' % len(dims), raw=dims)
    grid = np.arange(-1.0, 3.0 + 1e-9, 0.05) if r_grid is None else np.asarray(r_grid, dtype=float)
    builds = ordered_map(family.build, dims, n_jobs=n_jobs)
    logs = np.log(np.asarray(dims, dtype=float))
    slopes = []
    for r in grid:
        norms = [op_norm(A, s_probe, r, W) for W, A in builds]
        slopes.append(float(np.polyfit(logs, np.log(norms), 1)[0]))
    bounded = [i for i, slope in enumerate(slopes) if slope <= slope_tol]
    if not bounded:
        log.warning('%s: norms grow for every r up to %g', family.name, grid[-1])
        return OrderEstimate(family.name, math.inf, math.inf, s_probe, grid.tolist(), slopes)
    first = bounded[0]
    order = float(grid[first])
    if first >= 2 and slopes[first - 2] > slope_tol:
        (r1, g1), (r2, g2) = (grid[first - 2], slopes[first - 2]), (grid[first - 1], slopes[first - 1])
        if g1 != g2:
            root = r2 - g2 * (r2 - r1) / (g2 - g1)
            order = float(min(max(root, r2), 2 * grid[first] - r2))
    log.debug('%s: bounded from r = %g, order estimate %.4f', family.name, grid[first], order)
    return OrderEstimate(family.name, order, float(grid[first]), s_probe, grid.tolist(), slopes)
