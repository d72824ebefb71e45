"""
moilab.heat
~~~~~~~~~~~

Heat traces and spectral actions of perturbed Dirac-type operators, their
expansions in iterated commutators, the theta-sum asymptotic and the
Dirichlet series of the badly behaved zeta functions.

"""
import logging
import math
from collections.abc import Callable, Sequence
from functools import cached_property
from typing import Any, Final

import numpy as np

from .exceptions import (
    BlowupGuard, DimensionMismatch, DivergentRegion, OrderExceeded, RangeGuard,
    SpectralGapViolation, TailTooFat,
)
from .expansion import MAX_TERMS, ExpansionResult
from .functions import SymbolFunction
from .moi import MoiProblem, moi_trace
from .report import AttributeMixin
from .sobolev import WeightOperator
from .spectral import HermitianOperator, as_hermitian, as_matrix
from .utils import ordered_map, random_hermitian, spawn_rng

log: Final = logging.getLogger(__name__)

GAP_TOL: Final = 1e-8
TAIL_EXPONENT: Final = 30.0
MANGOLDT_LIMIT: Final = 10 ** 7
MOI_TRACE_CAP: Final = 4 * 10 ** 6


class SpectralTripleModel:
    '''Finite model (D, V, P) with Theta = (1 + D^2)^(1/2).'''
    D: HermitianOperator
    V: np.ndarray
    P: np.ndarray

    def __init__(self, D: Any, V: Any = None, P: Any = None) -> None:
        self.D = as_hermitian(D)
        dim = self.D.dim
        self.V = as_hermitian(np.zeros((dim, dim)) if V is None else V).entries
        self.P = np.eye(dim, dtype=complex) if P is None else as_matrix(P)
        if self.V.shape != (dim, dim) or self.P.shape != (dim, dim):
            raise DimensionMismatch('D is %dx%d but V is %s and P is %s'
                                    % (dim, dim, self.V.shape, self.P.shape))

    @property
    def dim(self) -> int:
        return self.D.dim

    @cached_property
    def theta(self) -> WeightOperator:
        entries = self.D.entries
        if not np.any(entries - np.diag(np.diag(entries))):
            return WeightOperator.diagonal(np.sqrt(1.0 + np.diag(entries).real ** 2))
        spec = self.D.spectral
        return WeightOperator((spec.vectors * np.sqrt(1.0 + spec.nodes ** 2)) @ spec.vectors.conj().T)

    @cached_property
    def perturbed(self) -> HermitianOperator:
        return HermitianOperator(self.D.entries + self.V)

    def in_eigenbasis(self, X: np.ndarray) -> np.ndarray:
        U = self.D.spectral.vectors
        return U.conj().T @ X @ U

    def __repr__(self) -> str:
        return '%s (dim=%d, ||V||=%.3g)' % (self.__class__.__name__, self.dim, np.linalg.norm(self.V, 2))


def build_model(family: str, dim: int, potential: str = 'zero', strength: float = 0.1,
                projector: str = 'identity', seed: int = 0) -> SpectralTripleModel:
    '''Built-in models.

    ``family`` is ``diag`` (D = diag(1..N)) or ``harmonic`` (D^2 the
    oscillator Hamiltonian diag(2n + 1)).  ``potential`` is ``zero``,
    ``constant`` (strength * I), ``diagonal`` (uniform in +-strength) or
    ``random`` (Hermitian, spectral norm of order strength).  ``projector``
    is ``identity`` or ``random_diagonal`` (entries uniform in [0, 1]).
    '''
    rng = spawn_rng(seed)
    if family == 'diag':
        d = np.arange(1, dim + 1, dtype=float)
    elif family == 'harmonic':
        d = np.sqrt(2.0 * np.arange(dim) + 1.0)
    else:
        raise ValueError('unknown model family %r' % family)
    if potential == 'zero':
        V = np.zeros((dim, dim))
    elif potential == 'constant':
        V = strength * np.eye(dim)
    elif potential == 'diagonal':
        V = np.diag(rng.uniform(-strength, strength, dim))
    elif potential == 'random':
        V = random_hermitian(dim, rng, strength)
    else:
        raise ValueError('unknown potential %r' % potential)
    if projector == 'identity':
        P = np.eye(dim)
    elif projector == 'random_diagonal':
        P = np.diag(rng.uniform(0.0, 1.0, dim))
    else:
        raise ValueError('unknown projector %r' % projector)
    return SpectralTripleModel(np.diag(d), V, P)


def heat_trace_direct(model: SpectralTripleModel, t: float, kind: str = 'square') -> float:
    '''Tr(P e^{-t (D+V)^2}) or Tr(P e^{-t |D+V|}).'''
    if t <= 0:
        raise ValueError('heat trace needs t > 0, got %g' % t)
    spec = model.perturbed.spectral
    if kind == 'square':
        weights = np.exp(-t * spec.nodes ** 2)
    elif kind == 'abs':
        weights = np.exp(-t * np.abs(spec.nodes))
    else:
        raise ValueError('unknown heat trace kind %r' % kind)
    diagonal = np.einsum('ji,jk,ki->i', spec.vectors.conj(), model.P, spec.vectors)
    return float(np.real(np.sum(diagonal * weights)))


def series_term_count(N: int) -> int:
    '''Terms of the double sum over n, m <= N and compositions of m into n parts.'''
    return 1 + sum(math.comb(m + n - 1, n - 1) for n in range(1, N + 1) for m in range(N + 1))


def series_diagonals(nodes: np.ndarray, X: np.ndarray, N: int, left: np.ndarray | None = None) -> np.ndarray:
    '''diag(left Q_{n,m}) / (n + m)! for n, m <= N, in the eigenbasis of H.

    Q_{n,m} = sum over compositions of m into n parts of
    C_{m_1..m_n} delta^{m_1}(X) ... delta^{m_n}(X), with delta = [H, .]
    acting entrywise as (e_i - e_j)^m.  Built by the recursion
    Q_{k,M} = sum_m binom(k - 1 + M, m) Q_{k-1,M-m} delta^m(X).
    '''
    count = series_term_count(N)
    if count > MAX_TERMS:
        raise BlowupGuard('%d series terms at N=%d exceed %d' % (count, N, MAX_TERMS), raw=N)
    dim = nodes.size
    diff = nodes[:, None] - nodes[None, :]
    deltas = [X * diff ** m for m in range(N + 1)]
    left = np.eye(dim, dtype=complex) if left is None else left
    out = np.zeros((N + 1, N + 1, dim), dtype=complex)
    out[0, 0] = np.diag(left)
    previous = [np.eye(dim, dtype=complex)] + [np.zeros((dim, dim), dtype=complex)] * N
    for k in range(1, N + 1):
        current = []
        for M in range(N + 1):
            Q = np.zeros((dim, dim), dtype=complex)
            for m in range(M + 1):
                if np.any(previous[M - m]):
                    Q += math.comb(k - 1 + M, m) * (previous[M - m] @ deltas[m])
            current.append(Q)
            out[k, M] = np.einsum('ij,ji->i', left, Q) / math.factorial(k + M)
        previous = current
    log.debug('series diagonals for N=%d, dim=%d (%d terms)', N, dim, count)
    return out


def _partial_sums(diagonals: np.ndarray, weight: Callable[[int, int], np.ndarray]) -> list[complex]:
    '''Cumulative sums over n, m <= k of sum_i diagonals[n, m, i] weight(n, m)_i.'''
    N = diagonals.shape[0] - 1
    sums, total = [], 0j
    for k in range(N + 1):
        for n in range(k + 1):
            for m in range(k + 1):
                if max(n, m) == k:
                    total += complex(np.sum(diagonals[n, m] * weight(n, m)))
        sums.append(total)
    return sums


def _square_perturbation(model: SpectralTripleModel) -> np.ndarray:
    '''A = DV + VD + V^2, so that (D+V)^2 = D^2 + A.'''
    D, V = model.D.entries, model.V
    return D @ V + V @ D + V @ V


def heat_trace_expansion(model: SpectralTripleModel, N: int, t_grid: Sequence[float],
                         n_jobs: int = 1) -> list[ExpansionResult]:
    '''sum_{n,m<=N} (-t)^{n+m} C/(n+m)! Tr(P A^(m_1) ... A^(m_n) e^{-t D^2})
    per t, against the direct trace.'''
    nodes = model.D.spectral.nodes ** 2
    diagonals = series_diagonals(nodes, model.in_eigenbasis(_square_perturbation(model)), N,
                                 model.in_eigenbasis(model.P))
    counts = _term_counts(N)

    def at(t: float) -> ExpansionResult:
        decay = np.exp(-t * nodes)
        sums = _partial_sums(diagonals, lambda n, m: (-t) ** (n + m) * decay)
        return ExpansionResult('heat[t=%g]' % t, sums, heat_trace_direct(model, t, 'square'), counts)
    return ordered_map(at, list(t_grid), n_jobs=n_jobs)


def _term_counts(N: int) -> list[int]:
    return [series_term_count(k) for k in range(N + 1)]


def _check_gap(values: np.ndarray, what: str) -> None:
    close = np.abs(values) <= GAP_TOL
    if np.any(close):
        raise SpectralGapViolation('%s has an eigenvalue within %g of 0: %g'
                                   % (what, GAP_TOL, values[close][0]), raw=values[close])


def abs_perturbation(model: SpectralTripleModel) -> np.ndarray:
    '''B = |D+V| - |D|, computed spectrally.'''
    _check_gap(model.D.spectral.eigenvalues, 'D')
    spec = model.perturbed.spectral
    _check_gap(spec.eigenvalues, 'D+V')
    dspec = model.D.spectral
    absolute = (spec.vectors * np.abs(spec.nodes)) @ spec.vectors.conj().T
    return absolute - (dspec.vectors * np.abs(dspec.nodes)) @ dspec.vectors.conj().T


def abs_expansion(model: SpectralTripleModel, N: int, t_grid: Sequence[float],
                  n_jobs: int = 1) -> list[ExpansionResult]:
    '''sum_{n,m<=N} (-t)^{n+m} C/(n+m)! Tr(P delta_|D|^{m_1}(B) ... e^{-t|D|})
    per t, against Tr(P e^{-t|D+V|}).'''
    B = abs_perturbation(model)
    nodes = np.abs(model.D.spectral.nodes)
    diagonals = series_diagonals(nodes, model.in_eigenbasis(B), N, model.in_eigenbasis(model.P))
    counts = _term_counts(N)

    def at(t: float) -> ExpansionResult:
        decay = np.exp(-t * nodes)
        sums = _partial_sums(diagonals, lambda n, m: (-t) ** (n + m) * decay)
        return ExpansionResult('abs[t=%g]' % t, sums, heat_trace_direct(model, t, 'abs'), counts)
    return ordered_map(at, list(t_grid), n_jobs=n_jobs)


def spectral_action_direct(model: SpectralTripleModel, f: SymbolFunction, t: float) -> float:
    '''Tr f(tD + tV)'''
    return float(np.real(np.sum(f(t * model.perturbed.spectral.nodes))))


def moi_level_sums(model: SpectralTripleModel, f: SymbolFunction, N: int, t: float) -> list[complex]:
    '''sum_{n<=k} t^n Tr T^{tD}_{f^[n]}(V, ..., V) for k = 0..N.'''
    if model.dim ** max(N, 1) > MOI_TRACE_CAP:
        raise BlowupGuard('MOI-level trace of order %d on dimension %d exceeds %d entries'
                          % (N, model.dim, MOI_TRACE_CAP), raw=(N, model.dim))
    scaled = HermitianOperator(t * model.D.entries)
    sums, total = [], 0j
    for n in range(N + 1):
        total += t ** n * moi_trace(MoiProblem.divided(f, scaled, [model.V] * n))
        sums.append(total)
    return sums


def spectral_action_expansion(model: SpectralTripleModel, f: SymbolFunction, N: int,
                              t_grid: Sequence[float], moi_level: bool = True,
                              n_jobs: int = 1) -> list[ExpansionResult]:
    '''sum_{n,m<=N} t^{n+m} C/(n+m)! Tr(delta_D^{m_1}(V) ... delta_D^{m_n}(V) f^(n+m)(tD))
    per t, against Tr f(tD + tV).

    With ``moi_level`` the partial sums of the MOI-level Taylor series are
    attached as ``companion``.
    '''
    if f.max_order < 2 * N + 3:
        raise OrderExceeded('%s declares %d derivatives, the order %d expansion needs %d'
                            % (f.name, f.max_order, N, 2 * N + 3), raw=N)
    nodes = model.D.spectral.nodes
    diagonals = series_diagonals(nodes, model.in_eigenbasis(model.V), N)
    counts = _term_counts(N)

    def at(t: float) -> ExpansionResult:
        sums = _partial_sums(diagonals, lambda n, m: t ** (n + m) * f.evaluate(t * nodes, n + m))
        companion = moi_level_sums(model, f, N, t) if moi_level else None
        return ExpansionResult('spectral_action[t=%g]' % t, sums, spectral_action_direct(model, f, t),
                               counts, companion=companion)
    return ordered_map(at, list(t_grid), n_jobs=n_jobs)


class AsymptoticFit(AttributeMixin):
    '''sum_k c_k t^{r_k} fitted by linear least squares with fixed exponents.'''
    attrs = ['exponents', 'coefficients', 'tgrid', 'residuals', 'max_residual']

    def __init__(self, exponents: list[float], coefficients: list[float], tgrid: list[float],
                 residuals: list[float]) -> None:
        self.exponents = exponents
        self.coefficients = coefficients
        self.tgrid = tgrid
        self.residuals = residuals
        self.max_residual = max(abs(r) for r in residuals) if residuals else 0.0

    def predict(self, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return sum(c * t ** r for c, r in zip(self.coefficients, self.exponents))

    def __repr__(self) -> str:
        terms = ' + '.join('%.6g t^%g' % (c, r) for c, r in zip(self.coefficients, self.exponents))
        return '%s (%s)' % (self.__class__.__name__, terms)


def fit_asymptotic(tgrid: Sequence[float], values: Sequence[float], exponents: Sequence[float]) -> AsymptoticFit:
    t = np.asarray(tgrid, dtype=float)
    y = np.asarray(values, dtype=float)
    basis = np.stack([t ** r for r in exponents], axis=1)
    coeffs, *_ = np.linalg.lstsq(basis, y, rcond=None)
    residuals = y - basis @ coeffs
    return AsymptoticFit([float(r) for r in exponents], coeffs.tolist(), t.tolist(), residuals.tolist())


def theta_sum(t: float, Nmax: int) -> float:
    '''sum_{n=1}^{Nmax} e^{-t n^2}'''
    n = np.arange(1, Nmax + 1, dtype=float)
    return float(np.sum(np.exp(-t * n * n)))


def theta_asymptotic_check(Nmax: int, t_grid: Sequence[float],
                           exponents: Sequence[float] = (-0.5, 0.0)) -> AsymptoticFit:
    '''Fit c_- t^{-1/2} + c_0 to the truncated theta sum; expected c_- =
    sqrt(pi)/2 and c_0 = -1/2.'''
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise ValueError('t grid must be positive')
    worst = float(t.min()) * Nmax ** 2
    if worst < TAIL_EXPONENT:
        raise TailTooFat('t Nmax^2 = %.3g < %g leaves a truncation tail' % (worst, TAIL_EXPONENT), raw=worst)
    fit = fit_asymptotic(t, [theta_sum(x, Nmax) for x in t], exponents)
    log.debug('theta sum fit %r, max residual %.2e', fit, fit.max_residual)
    return fit


class ZetaPartial(AttributeMixin):
    attrs = ['value', 'tail_bound', 'nmax', 'sigma']

    def __init__(self, value: complex, tail_bound: float, nmax: int, sigma: float) -> None:
        self.value = value
        self.tail_bound = tail_bound
        self.nmax = nmax
        self.sigma = sigma

    def __repr__(self) -> str:
        return '%s (%s +- %.2e)' % (self.__class__.__name__, self.value, self.tail_bound)


Coefficients = Callable[[np.ndarray], np.ndarray]


def zeta_partial(coeffs: Coefficients, s: complex, nmax: int, power: float = 1.0, start: int = 1,
                 coeff_bound: float | None = None) -> ZetaPartial:
    '''sum_{n=start}^{nmax} c(n) n^{-power s} with an integral tail bound.

    The bound C nmax^{1-sigma} / (sigma - 1), sigma = Re(power s), uses
    ``coeff_bound`` for C when given, else max |c(n)| over [nmax/2, nmax];
    the latter is a bound whenever |c| does not increase beyond nmax.
    '''
    sigma = float(np.real(power * s))
    if sigma <= 1.0:
        raise DivergentRegion('Re(%g s) = %g <= 1 for s = %s' % (power, sigma, s), raw=s)
    if nmax < start:
        raise ValueError('nmax %d below the first index %d' % (nmax, start))
    n = np.arange(start, nmax + 1)
    c = np.asarray(coeffs(n))
    value = complex(np.sum(c * np.exp(-power * s * np.log(n.astype(float)))))
    if coeff_bound is None:
        coeff_bound = float(np.max(np.abs(c[n >= max(start, nmax // 2)])))
    tail = coeff_bound * nmax ** (1.0 - sigma) / (sigma - 1.0)
    return ZetaPartial(value, tail, nmax, sigma)


def von_mangoldt(n: int) -> float:
    '''log p if n = p^k for a prime p, else 0.'''
    if n < 1:
        raise ValueError('von Mangoldt function needs n >= 1, got %d' % n)
    if n > MANGOLDT_LIMIT:
        raise RangeGuard('trial factorisation is limited to n <= %d' % MANGOLDT_LIMIT, raw=n)
    if n == 1:
        return 0.0
    p = next((d for d in range(2, math.isqrt(n) + 1) if n % d == 0), n)
    while n % p == 0:
        n //= p
    return math.log(p) if n == 1 else 0.0


def mangoldt_table(nmax: int) -> np.ndarray:
    '''Lambda(0..nmax) by a sieve; entry 0 is 0.'''
    table = np.zeros(nmax + 1)
    if nmax < 2:
        return table
    sieve = np.ones(nmax + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(nmax) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    for p in np.flatnonzero(sieve):
        q = int(p)
        while q <= nmax:
            table[q] = math.log(p)
            q *= int(p)
    return table


def _one(n: np.ndarray) -> np.ndarray:
    return np.ones(n.shape)


def _inverse_log(n: np.ndarray) -> np.ndarray:
    return 1.0 / np.log(n.astype(float))


def _mangoldt_over_log(n: np.ndarray) -> np.ndarray:
    table = mangoldt_table(int(n.max()))
    return table[n] / np.log(n.astype(float))


# name -> (coefficients, first index)
DIRICHLET_COEFFICIENTS: Final[dict[str, tuple[Coefficients, int]]] = {
    'one': (_one, 1),
    'inv_log': (_inverse_log, 2),
    'mangoldt_over_log': (_mangoldt_over_log, 2),
}


def dirichlet_coefficients(name: str) -> tuple[Coefficients, int]:
    try:
        return DIRICHLET_COEFFICIENTS[name]
    except KeyError:
        raise ValueError('unknown coefficient sequence %r, expected one of %s'
                         % (name, sorted(DIRICHLET_COEFFICIENTS)))
