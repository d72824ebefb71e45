"""
moilab.expansion
~~~~~~~~~~~~~~~~

Multiset and expansion coefficients, Taylor and commutator expansions of
multiple operator integrals, their remainders and power-law fits of how the
remainders scale.

"""
import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Final

import numpy as np
import scipy.stats

from .exceptions import BlowupGuard, DegenerateFit, DimensionMismatch, OrderExceeded, SpectrumTooLow
from .functions import SymbolFunction, log_function, power_function
from .moi import MoiProblem, moi_evaluate
from .report import AttributeMixin
from .sobolev import delta_power
from .spectral import HermitianOperator, apply_function, as_hermitian, as_matrix
from .utils import ordered_map

log: Final = logging.getLogger(__name__)

MAX_TERMS: Final = 10 ** 6
EXACT_FLOOR: Final = 1e-13
MIN_FIT_POINTS: Final = 4
MIN_FIT_DECADES: Final = 1.5
SPECTRUM_FLOOR: Final = 1e-8


def multiset_coeff(n: int, k: int) -> int:
    '''Number of size-k multisets from n kinds, binom(n + k - 1, k).'''
    if n < 0 or k < 0:
        raise ValueError('multiset coefficient needs nonnegative arguments, got (%d, %d)' % (n, k))
    if k == 0:
        return 1
    return math.comb(n + k - 1, k)


@dataclass(frozen=True)
class MultiIndex:
    parts: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.parts):
            raise ValueError('multi-index parts must be nonnegative: %s' % (self.parts,))

    @property
    def n(self) -> int:
        return len(self.parts)

    @property
    def m(self) -> int:
        return sum(self.parts)

    def __str__(self) -> str:
        return '(%s)' % ','.join(str(p) for p in self.parts)


def compositions(m: int, n: int) -> Iterator[tuple[int, ...]]:
    '''Compositions of m into n nonnegative parts, the last part varying slowest.'''
    if n == 0:
        if m == 0:
            yield ()
        return
    for last in range(m + 1):
        for head in compositions(m - last, n - 1):
            yield head + (last,)


def expansion_coeff(mi: MultiIndex) -> int:
    '''prod_j binom(j + m_1 + ... + m_j - 1, m_j)'''
    total, running = 1, 0
    for j, part in enumerate(mi.parts, start=1):
        running += part
        total *= math.comb(j + running - 1, part)
    return total


def term_count(n: int, N: int) -> int:
    '''Number of multi-indices with n parts and total order at most N.'''
    return math.comb(N + n, n)


@dataclass(frozen=True)
class ExpansionTerm:
    '''delta^{m_1}(X_1) ... delta^{m_n}(X_n) f^(n+m)(H) with its exact
    coefficient C / (n + m)!.'''
    index: MultiIndex
    coefficient: Fraction
    operator: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return float(self.coefficient) * self.operator


def _size(value: Any) -> float:
    if np.ndim(value) == 0:
        return float(abs(value))
    return float(np.linalg.norm(value, 2))


class ExpansionResult(AttributeMixin):
    '''Partial sums of an expansion, indexed by truncation order, against an
    exact reference.

    Sums are matrices or, for traces, scalars.  ``companion`` optionally
    holds a second route to the same partial sums.
    '''
    attrs = ['name', 'orders', 'term_counts', 'remainder_norms', 'orders_fitted', 'identity_residual']

    def __init__(self, name: str, partial_sums: list[Any], exact: Any,
                 term_counts: list[int], identity_residual: float | None = None,
                 companion: list[Any] | None = None) -> None:
        self.name = name
        self.partial_sums = partial_sums
        self.exact = exact
        self.term_counts = term_counts
        self.identity_residual = identity_residual
        self.companion = companion
        self.orders_fitted: list[float] = []

    @property
    def orders(self) -> list[int]:
        return list(range(len(self.partial_sums)))

    @cached_property
    def remainder_norms(self) -> list[float]:
        return [_size(self.exact - s) for s in self.partial_sums]

    @property
    def partial_norms(self) -> list[float]:
        return [_size(s) for s in self.partial_sums]

    @property
    def companion_gaps(self) -> list[float]:
        if self.companion is None:
            return []
        return [_size(a - b) for a, b in zip(self.partial_sums, self.companion)]

    def rows(self) -> list[list[Any]]:
        '''order, term_count, partial_norm, remainder_norm, fitted_slope'''
        slopes = self.orders_fitted + [math.nan] * (len(self.partial_sums) - len(self.orders_fitted))
        return [[k, self.term_counts[k], self.partial_norms[k], self.remainder_norms[k], slopes[k]]
                for k in self.orders]

    def __repr__(self) -> str:
        return '%s %s (N=%d)' % (self.__class__.__name__, self.name, len(self.partial_sums) - 1)


EXPANSION_COLUMNS: Final = ['order', 'term_count', 'partial_norm', 'remainder_norm', 'fitted_slope']


def _require_order(f: SymbolFunction, order: int) -> None:
    if f.max_order < order:
        raise OrderExceeded('%s has derivatives up to order %d, %d needed'
                            % (f.name, f.max_order, order), raw=order)


def _pair(H: Any, V: Any) -> tuple[HermitianOperator, np.ndarray]:
    H = as_hermitian(H)
    V = as_matrix(V)
    if V.shape != H.entries.shape:
        raise DimensionMismatch('H is %s but the argument is %s' % (H.entries.shape, V.shape))
    return H, V


def taylor_expand(f: SymbolFunction, H: Any, V: Any, N: int, n_jobs: int = 1) -> ExpansionResult:
    '''Partial sums sum_{n<=k} T^H_{f^[n]}(V, ..., V) of f(H + V), k = 0..N.

    ``identity_residual`` compares f(H + V) - partial_sums[N] with
    T^{H+V, H, ..., H}_{f^[N+1]}(V, ..., V).
    '''
    _require_order(f, N + 3)
    H, V = _pair(H, V)
    perturbed = HermitianOperator(H.entries + V)

    def term(n: int) -> np.ndarray:
        return moi_evaluate(MoiProblem.divided(f, H, [V] * n))

    sums = np.cumsum(np.stack(ordered_map(term, range(N + 1), n_jobs=n_jobs)), axis=0)
    exact = apply_function(f, perturbed)
    tail = moi_evaluate(MoiProblem(f, (perturbed,) + (H,) * (N + 1), (V,) * (N + 1)))
    residual = float(np.linalg.norm(exact - sums[N] - tail, 2))
    log.debug('taylor N=%d: remainder identity residual %.3e', N, residual)
    return ExpansionResult('taylor', list(sums), exact, [1] * (N + 1), residual)


class _CommutatorCache:
    '''delta_H^m(X_j) and f^(k)(H) computed once each.'''

    def __init__(self, f: SymbolFunction, H: HermitianOperator, x_ops: Sequence[np.ndarray]) -> None:
        self.f = f
        self.H = H
        self.x_ops = list(x_ops)
        self._deltas: dict[tuple[int, int], np.ndarray] = {}
        self._derivatives: dict[int, np.ndarray] = {}

    def delta(self, j: int, m: int) -> np.ndarray:
        key = (j, m)
        if key not in self._deltas:
            self._deltas[key] = self.x_ops[j] if m == 0 else delta_power(self.H, self.delta(j, m - 1), 1)
        return self._deltas[key]

    def derivative(self, k: int) -> np.ndarray:
        if k not in self._derivatives:
            self._derivatives[k] = apply_function(self.f, self.H, k)
        return self._derivatives[k]


def expansion_terms(f: SymbolFunction, H: Any, x_ops: Sequence[Any], N: int) -> Iterator[ExpansionTerm]:
    '''Terms of order m = 0..N, grouped by m, compositions in colex order.'''
    n = len(x_ops)
    if term_count(n, N) > MAX_TERMS:
        raise BlowupGuard('%d terms for n=%d, N=%d exceed %d' % (term_count(n, N), n, N, MAX_TERMS),
                          raw=(n, N))
    _require_order(f, n + N)
    H = as_hermitian(H)
    cache = _CommutatorCache(f, H, [_pair(H, X)[1] for X in x_ops])
    for m in range(N + 1):
        for parts in compositions(m, n):
            mi = MultiIndex(parts)
            product = cache.derivative(n + m)
            for j in reversed(range(n)):
                product = cache.delta(j, parts[j]) @ product
            yield ExpansionTerm(mi, Fraction(expansion_coeff(mi), math.factorial(n + m)), product)


def combinatorial_expand(f: SymbolFunction, H: Any, x_ops: Sequence[Any], N: int,
                         check_remainder: bool = True) -> ExpansionResult:
    '''Partial sums of T^H_{f^[n]}(X_1, ..., X_n) by total commutator order.

    With ``check_remainder`` the assembled remainder S^n_N is compared with
    the exact MOI minus partial_sums[N]; the norm of the difference becomes
    ``identity_residual``.
    '''
    n = len(x_ops)
    H = as_hermitian(H)
    xs = [_pair(H, X)[1] for X in x_ops]
    batches = [np.zeros((H.dim, H.dim), dtype=complex) for _ in range(N + 1)]
    counts = [0] * (N + 1)
    for term in expansion_terms(f, H, xs, N):
        batches[term.index.m] += term.value
        counts[term.index.m] += 1
    sums = list(np.cumsum(np.stack(batches), axis=0))
    exact = moi_evaluate(MoiProblem.divided(f, H, xs))
    residual = None
    if check_remainder and n > 0:
        residual = float(np.linalg.norm(exact - sums[N] - assembled_remainder(f, H, xs, N), 2))
        log.debug('combinatorial n=%d N=%d: assembled remainder residual %.3e', n, N, residual)
    return ExpansionResult('combinatorial', sums, exact, list(np.cumsum(counts)), residual)


def _ones(count: int) -> list[None]:
    return [None] * count


def _divided(f: SymbolFunction, H: HermitianOperator, args: Sequence[np.ndarray | None]) -> np.ndarray:
    return moi_evaluate(MoiProblem.divided(f, H, list(args)))


def commute1_remainder(f: SymbolFunction, H: HermitianOperator, xs: Sequence[np.ndarray],
                       j: int, N: int) -> np.ndarray:
    '''R^n_{j,N}(X_1, ..., X_n) = sum_{l<=j} multiset(N+1, l)
    T_{f^[n+j+N+1]}(1^{j-l}, delta^{N+1}(X_1), 1^{N+1+l}, X_2, ..., X_n).'''
    top = delta_power(H, xs[0], N + 1)
    total = np.zeros((H.dim, H.dim), dtype=complex)
    for l in range(j + 1):
        args = _ones(j - l) + [top] + _ones(N + 1 + l) + list(xs[1:])
        total += multiset_coeff(N + 1, l) * _divided(f, H, args)
    return total


def commute1_sides(f: SymbolFunction, H: Any, x_ops: Sequence[Any], j: int,
                   N: int) -> tuple[np.ndarray, np.ndarray]:
    '''T^H_{f^[n+j]}(1^j, X_1, ..., X_n) and its expansion in delta_H^m(X_1),
    m <= N, plus the remainder R^n_{j,N}.'''
    if j < 0 or N < 0:
        raise ValueError('j and N must be nonnegative')
    if not x_ops:
        raise ValueError('at least one argument X_1 is needed')
    H = as_hermitian(H)
    xs = [_pair(H, X)[1] for X in x_ops]
    n = len(xs)
    _require_order(f, n + j + N + 1)
    lhs = _divided(f, H, _ones(j) + xs)
    rhs = commute1_remainder(f, H, xs, j, N)
    for m in range(N + 1):
        tail = _divided(f, H, _ones(j + 1 + m) + xs[1:])
        rhs = rhs + multiset_coeff(m + 1, j) * delta_power(H, xs[0], m) @ tail
    return lhs, rhs


def commute1_residual(f: SymbolFunction, H: Any, x_ops: Sequence[Any], j: int, N: int) -> float:
    lhs, rhs = commute1_sides(f, H, x_ops, j, N)
    return float(np.linalg.norm(lhs - rhs, 2))


def assembled_remainder(f: SymbolFunction, H: Any, x_ops: Sequence[Any], N: int,
                        coefficient_start: int = 1) -> np.ndarray:
    '''S^n_N assembled from the one-slot remainders.

    sum_{k<n} sum_{m_1+..+m_k<=N} prod_{j<=k} multiset(m_j + 1, j - 1 + M_{j-1})
    delta^{m_1}(X_1) ... delta^{m_k}(X_k) R^{n-k}_{k+M_k, N-M_k}(X_{k+1}, ..., X_n)

    where M_i = m_1 + ... + m_i.  ``coefficient_start`` = 2 starts the running
    sum inside the coefficients at m_2 instead; that variant does not
    reproduce the remainder and is kept to measure by how much.
    '''
    H = as_hermitian(H)
    xs = [_pair(H, X)[1] for X in x_ops]
    n = len(xs)
    cache = _CommutatorCache(f, H, xs)
    total = np.zeros((H.dim, H.dim), dtype=complex)
    for k in range(n):
        for budget in range(N + 1):
            for parts in compositions(budget, k):
                coeff, running = 1, 0
                prefix = np.eye(H.dim, dtype=complex)
                for j, part in enumerate(parts, start=1):
                    shifted = running - (parts[0] if coefficient_start == 2 and j > 1 else 0)
                    coeff *= multiset_coeff(part + 1, j - 1 + shifted)
                    prefix = prefix @ cache.delta(j - 1, part)
                    running += part
                total += coeff * prefix @ commute1_remainder(f, H, xs[k:], k + budget, N - budget)
    return total


def commutator_function(kind: SymbolFunction | float | str) -> SymbolFunction:
    '''A symbol, a real power alpha (Theta^alpha) or ``"log"``.'''
    if isinstance(kind, SymbolFunction):
        return kind
    if kind == 'log':
        return log_function()
    if isinstance(kind, str):
        raise ValueError('unknown commutator symbol %r' % kind)
    return power_function(float(kind))


def commutator_expand(kind: SymbolFunction | float | str, Theta: Any, X: Any, N: int) -> ExpansionResult:
    '''Partial sums of [f(Theta), X] ~ sum_{k=1}^N delta_Theta^k(X) f^(k)(Theta) / k!.

    partial_sums[0] is zero.  For powers the coefficients are binom(alpha, k)
    Theta^(alpha - k), for the logarithm (-1)^(k-1)/k Theta^(-k).
    '''
    f = commutator_function(kind)
    Theta, Xm = _pair(Theta, X)
    if not isinstance(kind, SymbolFunction) or f.domain[0] == 0.0:
        low = float(Theta.spectral.eigenvalues[0])
        if low <= SPECTRUM_FLOOR:
            raise SpectrumTooLow('%s needs Theta > %g, smallest eigenvalue is %g'
                                 % (f.name, SPECTRUM_FLOOR, low), raw=low)
    _require_order(f, N)
    fTheta = apply_function(f, Theta)
    exact = fTheta @ Xm - Xm @ fTheta
    sums = [np.zeros_like(exact)]
    delta = Xm
    for k in range(1, N + 1):
        delta = delta_power(Theta.entries, delta, 1)
        sums.append(sums[-1] + delta @ apply_function(f, Theta, k) / math.factorial(k))
    return ExpansionResult('commutator[%s]' % f.name, sums, exact, list(range(N + 1)))


class OrderFit(AttributeMixin):
    '''Least-squares power law value ~ scale^slope with a 95% interval.'''
    attrs = ['order', 'slope', 'low', 'high', 'intercept', 'exact']

    def __init__(self, order: int, slope: float, low: float, high: float,
                 intercept: float, exact: bool = False) -> None:
        self.order = order
        self.slope = slope
        self.low = low
        self.high = high
        self.intercept = intercept
        self.exact = exact

    @classmethod
    def exact_regime(cls, order: int) -> 'OrderFit':
        return cls(order, math.nan, math.nan, math.nan, math.nan, exact=True)

    def __repr__(self) -> str:
        if self.exact:
            return '%s (order %d, exact)' % (self.__class__.__name__, self.order)
        return '%s (order %d, slope %.3f [%.3f, %.3f])' % (
            self.__class__.__name__, self.order, self.slope, self.low, self.high)


def fit_power_law(scales: Sequence[float], values: Sequence[float], order: int = 0) -> OrderFit:
    '''Slope of log(value) against log(scale).

    Values all below 1e-13 are the exactness regime and come back flagged
    ``exact``; a grid with fewer than 4 points, spanning less than 1.5
    decades, or mixing exact and inexact values raises ``DegenerateFit``.
    '''
    x = np.asarray(scales, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size != y.size:
        raise DimensionMismatch('%d scales for %d values' % (x.size, y.size))
    if x.size < MIN_FIT_POINTS or np.any(x <= 0):
        raise DegenerateFit('need at least %d positive scales, got %s' % (MIN_FIT_POINTS, x.tolist()), raw=x)
    decades = math.log10(float(x.max() / x.min()))
    if decades < MIN_FIT_DECADES:
        raise DegenerateFit('scales span %.2f decades, need %.1f' % (decades, MIN_FIT_DECADES), raw=x)
    small = np.abs(y) < EXACT_FLOOR
    if np.all(small):
        return OrderFit.exact_regime(order)
    if np.any(small):
        raise DegenerateFit('order %d: %d of %d values below %.0e'
                            % (order, int(small.sum()), y.size, EXACT_FLOOR), raw=y)
    fit = scipy.stats.linregress(np.log(x), np.log(np.abs(y)))
    spread = float(scipy.stats.t.ppf(0.975, x.size - 2)) * fit.stderr
    log.debug('order %d: slope %.4f +- %.4f', order, fit.slope, spread)
    return OrderFit(order, float(fit.slope), float(fit.slope - spread), float(fit.slope + spread),
                    float(fit.intercept))


def remainder_order_fit(results: Sequence[ExpansionResult], scale_grid: Sequence[float]) -> list[OrderFit]:
    '''Per truncation order, the power law of the remainder in the scale.

    ``results[i]`` is the expansion at ``scale_grid[i]``.  The fitted slopes
    are also stored as ``orders_fitted`` on every result.
    '''
    if len(results) != len(scale_grid):
        raise DimensionMismatch('%d results for %d scales' % (len(results), len(scale_grid)))
    depth = min(len(r.partial_sums) for r in results)
    fits = [fit_power_law(scale_grid, [r.remainder_norms[k] for r in results], order=k)
            for k in range(depth)]
    for r in results:
        r.orders_fitted = [fit.slope for fit in fits]
    return fits


class DeltaGrowth(AttributeMixin):
    '''||delta_H^m(X)||_2 for m = 0..m_max and the fitted geometric rate.'''
    attrs = ['norms', 'rate']

    def __init__(self, norms: list[float], rate: float) -> None:
        self.norms = norms
        self.rate = rate


def delta_growth(H: Any, X: Any, m_max: int) -> DeltaGrowth:
    '''Empirical growth of iterated commutators; ``rate`` is exp of the
    log-linear slope in m, comparable with twice the spectral radius.'''
    H, Xm = _pair(H, X)
    norms = [float(np.linalg.norm(delta_power(H.entries, Xm, m), 2)) for m in range(m_max + 1)]
    positive = [(m, v) for m, v in enumerate(norms) if v > EXACT_FLOOR]
    rate = 0.0
    if len(positive) >= 2:
        ms, vs = zip(*positive)
        rate = float(np.exp(np.polyfit(ms, np.log(vs), 1)[0]))
    return DeltaGrowth(norms, rate)
