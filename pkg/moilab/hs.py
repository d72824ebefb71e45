"""
moilab.hs
~~~~~~~~~

Almost analytic extensions and the Helffer-Sjostrand formula
f(A) = -(1/pi) int dbar f~(z) (z - A)^{-1} dx dy, evaluated by adaptive
Gauss-Legendre panels over the support strip.

"""
import heapq
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, Final

import numpy as np

from .exceptions import (
    DimensionMismatch, OrderExceeded, QuadratureStall, SingularResolvent, SingularZ,
)
from .functions import SymbolFunction, cutoff_function, smoothstep
from .report import AttributeMixin
from .sobolev import WeightOperator, op_norm, t_beta_seminorm
from .spectral import apply_function, as_hermitian, as_matrix
from .utils import jbracket

log: Final = logging.getLogger(__name__)

RESOLVENT_TOL: Final = 1e-12
U_BREAKS: Final = (-2.0, -1.0, 0.0, 1.0, 2.0)
DIAGNOSTIC_COLUMNS: Final = ['x_center', 'u_center', 'x_size', 'u_size', 'estimate', 'depth']


def _psi(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    pos = u > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, u, 1.0)), 0.0)


def _psi_prime(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    pos = u > 0
    safe = np.where(pos, u, 1.0)
    return np.where(pos, np.exp(-1.0 / safe) / safe ** 2, 0.0)


@dataclass(frozen=True)
class Bump:
    '''Smooth tau with tau = 1 on |s| <= 1 and tau = 0 on |s| >= 2.'''
    name: str
    value: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    derivative: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, s: Any) -> np.ndarray:
        return self.value(np.asarray(s, dtype=float))


def _psi_quotient(s: np.ndarray) -> np.ndarray:
    r = np.abs(s)
    a, b = _psi(2.0 - r), _psi(r - 1.0)
    return a / (a + b)


def _psi_quotient_prime(s: np.ndarray) -> np.ndarray:
    r = np.abs(s)
    a, b = _psi(2.0 - r), _psi(r - 1.0)
    da, db = -_psi_prime(2.0 - r), _psi_prime(r - 1.0)
    return np.sign(s) * (da * b - a * db) / (a + b) ** 2


def smoothstep_bump(order: int = 8) -> Bump:
    '''C^order bump, 1 - S(|s| - 1) on the ramp.'''
    step = smoothstep(order)
    slope = step.deriv()

    def value(s: np.ndarray) -> np.ndarray:
        r = np.abs(s)
        return np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, 1.0 - step(np.clip(r - 1.0, 0.0, 1.0))))

    def derivative(s: np.ndarray) -> np.ndarray:
        r = np.abs(s)
        ramp = (r > 1.0) & (r < 2.0)
        return np.where(ramp, -np.sign(s) * slope(np.clip(r - 1.0, 0.0, 1.0)), 0.0)
    return Bump('smoothstep(%d)' % order, value, derivative)


PSI_BUMP: Final = Bump('psi', _psi_quotient, _psi_quotient_prime)
BUMPS: Final = {'psi': PSI_BUMP, 'smoothstep': smoothstep_bump()}


def bump_tau(s: Any) -> np.ndarray:
    '''psi(2 - |s|) / (psi(2 - |s|) + psi(|s| - 1)), psi(u) = e^{-1/u} for u > 0.'''
    return PSI_BUMP(s)


@dataclass(frozen=True)
class AlmostAnalyticExtension:
    '''f~(x + iy) = sum_{r<=N} f^(r)(x) (iy)^r / r! tau(y / <x>).'''
    f: SymbolFunction
    N: int
    tau: Bump = PSI_BUMP

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError('almost analytic extensions need N >= 1')
        if self.f.max_order < self.N + 1:
            raise OrderExceeded('%s has derivatives up to %d, the order %d extension needs %d'
                                % (self.f.name, self.f.max_order, self.N, self.N + 1), raw=self.N)

    def _taylor(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        total = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for r in range(self.N + 1):
            total = total + self.f.evaluate(x, r) * (1j * y) ** r / math.factorial(r)
        return total

    def __call__(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        return self._taylor(x, y) * self.tau(y / jbracket(x))

    def dbar(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        '''1/2 (d/dx + i d/dy) f~ at x + iy.'''
        bracket = jbracket(x)
        u = y / bracket
        sigma = self.tau.value(u)
        slope = self.tau.derivative(u)
        sigma_y = slope / bracket
        sigma_x = -slope * u * x / bracket ** 2
        edge = self.f.evaluate(x, self.N + 1) * (1j * y) ** self.N / math.factorial(self.N)
        return 0.5 * self._taylor(x, y) * (sigma_x + 1j * sigma_y) + 0.5 * edge * sigma


def dbar(ext: AlmostAnalyticExtension, z: Any) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return ext.dbar(z.real, z.imag)


@dataclass(frozen=True)
class QuadratureSpec:
    '''Adaptive tensor Gauss-Legendre panels in (x, u), y = u <x>.

    Panels are split into four until the summed error estimate is below
    max(abs_tol, rel_tol |total|); a panel's estimate is the gap between its
    own rule and the rule on its four children.
    '''
    points: int = 8
    rel_tol: float = 1e-8
    abs_tol: float = 1e-11
    max_panels: int = 20000
    max_depth: int = 30


class QuadratureReport(AttributeMixin):
    attrs = ['error_estimate', 'panels', 'evaluations', 'history']

    def __init__(self, value: np.ndarray, error_estimate: float, panels: int, evaluations: int,
                 diagnostics: list[list[float]], history: list[float]) -> None:
        self.value = value
        self.error_estimate = error_estimate
        self.panels = panels
        self.evaluations = evaluations
        self.diagnostics = diagnostics
        self.history = history

    def __repr__(self) -> str:
        return '%s (%d panels, error %.2e)' % (self.__class__.__name__, self.panels, self.error_estimate)


Integrand = Callable[[np.ndarray, np.ndarray], np.ndarray]


class _Panel:
    __slots__ = ('x0', 'x1', 'u0', 'u1', 'depth', 'value', 'children', 'error')

    def __init__(self, x0: float, x1: float, u0: float, u1: float, depth: int) -> None:
        self.x0, self.x1, self.u0, self.u1, self.depth = x0, x1, u0, u1, depth
        self.value: Any = None
        self.children: list['_Panel'] = []
        self.error = 0.0

    def split(self) -> list['_Panel']:
        xm, um = (self.x0 + self.x1) / 2, (self.u0 + self.u1) / 2
        d = self.depth + 1
        return [_Panel(self.x0, xm, self.u0, um, d), _Panel(xm, self.x1, self.u0, um, d),
                _Panel(self.x0, xm, um, self.u1, d), _Panel(xm, self.x1, um, self.u1, d)]

    @property
    def refined(self) -> Any:
        return sum(c.value for c in self.children)

    @property
    def key(self) -> tuple[float, float]:
        return (self.x0, self.u0)


class _PanelRule:
    def __init__(self, integrand: Integrand, points: int) -> None:
        nodes, weights = np.polynomial.legendre.leggauss(points)
        self.nodes = (nodes + 1.0) / 2.0
        self.weights = np.outer(weights, weights).ravel() / 4.0
        self.integrand = integrand
        self.evaluations = 0

    def apply(self, panels: Sequence[_Panel]) -> list[np.ndarray]:
        xs = np.concatenate([p.x0 + (p.x1 - p.x0) * self.nodes for p in panels])
        us = np.concatenate([p.u0 + (p.u1 - p.u0) * self.nodes for p in panels])
        k = self.nodes.size
        X = np.concatenate([np.repeat(xs[i * k:(i + 1) * k], k) for i in range(len(panels))])
        U = np.concatenate([np.tile(us[i * k:(i + 1) * k], k) for i in range(len(panels))])
        values = self.integrand(X, U)
        self.evaluations += X.size
        out = []
        for i, p in enumerate(panels):
            block = values[i * k * k:(i + 1) * k * k]
            area = (p.x1 - p.x0) * (p.u1 - p.u0)
            out.append(area * np.tensordot(self.weights, block, axes=1))
        return out


def _measure(value: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(value)))


def adaptive_strip_integral(integrand: Integrand, x_breaks: Sequence[float],
                            quad: QuadratureSpec) -> QuadratureReport:
    '''Integral of ``integrand(x, u)`` over [x_breaks[0], x_breaks[-1]] x [-2, 2].'''
    rule = _PanelRule(integrand, quad.points)

    def assess(panels: list[_Panel]) -> None:
        children = [c for p in panels for c in p.split()]
        values = rule.apply(panels + children)
        for i, p in enumerate(panels):
            p.value = values[i]
            p.children = children[4 * i:4 * i + 4]
            for j, c in enumerate(p.children):
                c.value = values[len(panels) + 4 * i + j]
            p.error = _measure(p.refined - p.value)

    xs = sorted(set(float(b) for b in x_breaks))
    roots = [_Panel(a, b, c, d, 0) for a, b in zip(xs, xs[1:]) for c, d in zip(U_BREAKS, U_BREAKS[1:])]
    assess(roots)
    heap = [(-p.error, i, p) for i, p in enumerate(roots)]
    heapq.heapify(heap)
    counter = len(roots)
    error = sum(p.error for p in roots)
    total = sum(p.refined for p in roots)
    history = []
    while True:
        history.append(error)
        if error <= max(quad.abs_tol, quad.rel_tol * _measure(total)):
            break
        if len(heap) >= quad.max_panels:
            raise QuadratureStall('%d panels spent with error estimate %.3e' % (len(heap), error),
                                  raw=history)
        _, _, worst = heapq.heappop(heap)
        if worst.depth >= quad.max_depth:
            raise QuadratureStall('panel at x=%g, u=%g reached depth %d with error %.3e'
                                  % (worst.x0, worst.u0, worst.depth, worst.error), raw=history)
        fresh = worst.children
        assess(fresh)
        error -= worst.error
        total = total - worst.refined
        for c in fresh:
            error += c.error
            total = total + c.refined
            heapq.heappush(heap, (-c.error, counter, c))
            counter += 1
    leaves = sorted((p for _, _, p in heap), key=lambda p: p.key)
    value = sum(p.refined for p in leaves)
    diagnostics = [[(p.x0 + p.x1) / 2, (p.u0 + p.u1) / 2, p.x1 - p.x0, p.u1 - p.u0, p.error, p.depth]
                   for p in leaves]
    report = QuadratureReport(value, history[-1], len(leaves), rule.evaluations, diagnostics, history)
    log.debug('strip integral: %r', report)
    return report


def _support_breaks(spectrum: np.ndarray, extra: Sequence[float] = ()) -> tuple[float, float, list[float]]:
    lo, hi = float(np.min(spectrum)) - 1.0, float(np.max(spectrum)) + 1.0
    breaks = [lo - 1.0, lo, hi, hi + 1.0] + [float(v) for v in spectrum] + list(extra)
    return lo, hi, breaks


def _extension(f: SymbolFunction, lo: float, hi: float, N: int, bump: str | Bump) -> AlmostAnalyticExtension:
    tau = BUMPS[bump] if isinstance(bump, str) else bump
    g = f * cutoff_function(lo, hi, width=1.0, order=N + 2)
    return AlmostAnalyticExtension(g, N, tau)


def _strip_weight(ext: AlmostAnalyticExtension, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    bracket = jbracket(x)
    y = u * bracket
    if np.any(np.abs(y) <= RESOLVENT_TOL):
        raise SingularResolvent('quadrature node within %g of the real axis' % RESOLVENT_TOL, raw=y)
    return x + 1j * y, -ext.dbar(x, y) * bracket / math.pi


def hs_apply_report(f: SymbolFunction, A: Any, N: int = 4, quad: QuadratureSpec | None = None,
                    bump: str | Bump = 'psi') -> QuadratureReport:
    '''f(A) by the Helffer-Sjostrand integral, with f multiplied by a cutoff
    equal to 1 on [min spec - 1, max spec + 1].'''
    M = as_matrix(A)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch('need a square matrix, got %s' % (M.shape,), raw=M.shape)
    spectrum = np.linalg.eigvals(M)
    if np.max(np.abs(spectrum.imag)) > 1e-10 * max(1.0, float(np.max(np.abs(spectrum)))):
        raise ValueError('Helffer-Sjostrand evaluation needs a real spectrum')
    lo, hi, breaks = _support_breaks(spectrum.real)
    ext = _extension(f, lo, hi, N, bump)
    eye = np.eye(M.shape[0])

    def integrand(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        z, w = _strip_weight(ext, x, u)
        return w[:, None, None] * np.linalg.inv(z[:, None, None] * eye - M)
    return adaptive_strip_integral(integrand, breaks, quad or QuadratureSpec())


def hs_apply(f: SymbolFunction, A: Any, N: int = 4, quad: QuadratureSpec | None = None,
             bump: str | Bump = 'psi') -> np.ndarray:
    return hs_apply_report(f, A, N, quad, bump).value


def hs_divided_difference(f: SymbolFunction, nodes: Sequence[float], N: int | None = None,
                          quad: QuadratureSpec | None = None, bump: str | Bump = 'psi') -> complex:
    '''f^[n](nodes) = -(1/pi) int dbar f~(z) prod_j (z - lambda_j)^{-1} dx dy.

    N defaults to n + 2.
    '''
    lam = np.asarray(nodes, dtype=float).ravel()
    n = lam.size - 1
    N = n + 2 if N is None else N
    if N < n + 1:
        raise ValueError('the contour form of f^[%d] needs N >= %d' % (n, n + 1))
    lo, hi, breaks = _support_breaks(lam)
    ext = _extension(f, lo, hi, N, bump)

    def integrand(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        z, w = _strip_weight(ext, x, u)
        return w / np.prod(z[:, None] - lam[None, :], axis=1)
    return complex(adaptive_strip_integral(integrand, breaks, quad or QuadratureSpec()).value)


class ResolventScan(AttributeMixin):
    attrs = ['s', 'exponent', 'fitted_C', 'violations']

    def __init__(self, s: float, exponent: float, ratios: list[float]) -> None:
        self.s = s
        self.exponent = exponent
        self.ratios = ratios
        self.fitted_C = max(ratios) if ratios else 0.0
        self.violations: list[int] = [i for i, r in enumerate(ratios) if not math.isfinite(r)]


def resolvent_bound_scan(A: Any, W: WeightOperator, s: float, z_grid: Sequence[complex]) -> ResolventScan:
    '''sup over z of ||(z - A)^{-1}||_{s -> s} |Im z| (|Im z| / <z>)^{2^|s| - 1}.'''
    M = W.check(A)
    eye = np.eye(M.shape[0])
    exponent = 2.0 ** abs(s) - 1.0
    ratios = []
    for z in z_grid:
        z = complex(z)
        if z.imag == 0:
            raise SingularZ('resolvent scan point %s lies on the real axis' % z, raw=z)
        try:
            R = np.linalg.inv(z * eye - M)
        except np.linalg.LinAlgError:
            raise SingularResolvent('z - A is singular at z = %s' % z, raw=z)
        bound = (jbracket(z) / abs(z.imag)) ** exponent / abs(z.imag)
        ratios.append(op_norm(R, s, 0.0, W) / bound)
    scan = ResolventScan(s, exponent, ratios)
    log.debug('resolvent scan at s=%g: C=%.4g over %d points', s, scan.fitted_C, len(ratios))
    return scan


def hs_norm_bound(f: SymbolFunction, A: Any, N: int) -> tuple[float, float]:
    '''(||f(A)||_2, sum_{k<=N+1} T^0_k(f)) for Hermitian A.'''
    H = as_hermitian(A)
    lhs = float(np.linalg.norm(apply_function(f, H), 2))
    rhs = sum(t_beta_seminorm(f, 0.0, k) for k in range(N + 2))
    return lhs, rhs
