"""
moilab.functions
~~~~~~~~~~~~~~~~

Scalar symbols with closed-form derivatives of every order they declare.

"""
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, Final

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import hermite

from .exceptions import OrderExceeded

log: Final = logging.getLogger(__name__)

DEFAULT_MAX_ORDER: Final = 40
INF: Final = math.inf

Derivatives = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class SymbolFunction:
    '''A scalar function f together with f^(k) for k <= max_order.

    ``derivatives(x, k)`` evaluates the k-th derivative elementwise on an
    array.  ``beta`` is the declared weight of the symbol class the function
    is meant to belong to and ``domain`` the open interval it may be applied
    on.
    '''
    name: str
    derivatives: Derivatives = field(repr=False)
    max_order: int
    beta: float = 0.0
    domain: tuple[float, float] = (-INF, INF)

    def __call__(self, x: Any) -> np.ndarray:
        return self.evaluate(x, 0)

    def evaluate(self, x: Any, k: int = 0) -> np.ndarray:
        if k < 0:
            raise ValueError('derivative order must be nonnegative, got %d' % k)
        if k > self.max_order:
            raise OrderExceeded('%s has derivatives up to order %d, order %d requested'
                                % (self.name, self.max_order, k), raw=k)
        return self.derivatives(np.asarray(x, dtype=float), k)

    def derivative(self, k: int) -> Callable[[Any], np.ndarray]:
        if k > self.max_order:
            raise OrderExceeded('%s has derivatives up to order %d, order %d requested'
                                % (self.name, self.max_order, k), raw=k)
        return lambda x: self.evaluate(x, k)

    value = __call__

    def contains(self, points: Any) -> bool:
        pts = np.asarray(points, dtype=float)
        lo, hi = self.domain
        return bool(np.all((pts > lo) & (pts < hi)))

    def __mul__(self, other: 'SymbolFunction') -> 'SymbolFunction':
        '''Pointwise product, derivatives by the Leibniz rule.'''
        first, second = self, other

        def derivatives(x: np.ndarray, k: int) -> np.ndarray:
            total = np.zeros(np.shape(x), dtype=complex)
            for j in range(k + 1):
                total = total + math.comb(k, j) * first.derivatives(x, j) * second.derivatives(x, k - j)
            return _real_if_close(total)

        domain = (max(first.domain[0], second.domain[0]), min(first.domain[1], second.domain[1]))
        return SymbolFunction('%s*%s' % (first.name, second.name), derivatives,
                              min(first.max_order, second.max_order),
                              beta=first.beta + second.beta, domain=domain)

    def check_smoothness(self, rng: np.random.Generator | None = None, points: int = 5,
                         rel_tol: float = 1e-6, orders: Sequence[int] | None = None) -> list[float]:
        '''Compare f^(k+1) with a 5-point central difference of f^(k).

        Returns the worst relative error per order checked; raises
        ``AssertionError`` naming the order that fails.  Orders default to
        ``range(min(max_order, 12))``.
        '''
        rng = np.random.default_rng(0) if rng is None else rng
        lo, hi = self.domain
        lo, hi = max(lo, -3.0), min(hi, 3.0)
        pad = 0.05 * (hi - lo)
        xs = rng.uniform(lo + pad, hi - pad, size=points)
        if orders is None:
            orders = range(min(self.max_order, 12))
        h = 1e-3 * max(1.0, float(np.max(np.abs(xs))))
        worst = []
        for k in orders:
            stencil = (self.derivatives(xs - 2 * h, k) - 8 * self.derivatives(xs - h, k)
                       + 8 * self.derivatives(xs + h, k) - self.derivatives(xs + 2 * h, k)) / (12 * h)
            exact = self.derivatives(xs, k + 1)
            scale = np.maximum(np.maximum(np.abs(exact), np.abs(self.derivatives(xs, k))), 1e-8)
            err = float(np.max(np.abs(stencil - exact) / scale))
            if err > rel_tol:
                raise AssertionError('%s: derivative %d disagrees with finite differences (%.3e)'
                                     % (self.name, k + 1, err))
            worst.append(err)
        return worst


def _real_if_close(values: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(values) and np.all(np.abs(values.imag) == 0):
        return values.real
    return values


def exp_function(rate: float = 1.0, max_order: int = DEFAULT_MAX_ORDER) -> SymbolFunction:
    '''x -> exp(rate * x)'''
    def derivatives(x: np.ndarray, k: int) -> np.ndarray:
        return rate ** k * np.exp(rate * x)
    return SymbolFunction('exp(%g x)' % rate, derivatives, max_order)


def gauss_function(a: float = 1.0, max_order: int = DEFAULT_MAX_ORDER) -> SymbolFunction:
    '''x -> exp(-a x^2), derivatives through physicists' Hermite polynomials.'''
    if a <= 0:
        raise ValueError('gauss width parameter must be positive')
    root = math.sqrt(a)

    def derivatives(x: np.ndarray, k: int) -> np.ndarray:
        y = root * x
        coeffs = np.zeros(k + 1)
        coeffs[k] = 1.0
        return (-root) ** k * hermite.hermval(y, coeffs) * np.exp(-y * y)
    return SymbolFunction('gauss(%g)' % a, derivatives, max_order)


def poly_function(coeffs: Sequence[float], max_order: int = DEFAULT_MAX_ORDER) -> SymbolFunction:
    '''Polynomial with coefficients in increasing degree.'''
    p = Polynomial(np.asarray(coeffs, dtype=float))

    def derivatives(x: np.ndarray, k: int) -> np.ndarray:
        return p.deriv(k)(x) if k else p(x)
    name = 'poly(%s)' % ', '.join('%g' % c for c in p.coef)
    return SymbolFunction(name, derivatives, max_order, beta=float(p.degree()))


def jap_power_function(alpha: float, max_order: int = DEFAULT_MAX_ORDER) -> SymbolFunction:
    '''x -> (1 + x^2)^(-alpha).

    Derivatives from (1+x^2) g^(j+1) = -(2j + 2 alpha) x g^(j) - j (j - 1 + 2 alpha) g^(j-1).
    '''
    def derivatives(x: np.ndarray, k: int) -> np.ndarray:
        q = 1.0 + x * x
        g_prev = q ** (-alpha)
        if k == 0:
            return g_prev
        g = -2.0 * alpha * x * g_prev / q
        for j in range(1, k):
            g_prev, g = g, (-(2 * j + 2 * alpha) * x * g - j * (j - 1 + 2 * alpha) * g_prev) / q
        return g
    return SymbolFunction('jap_power(%g)' % alpha, derivatives, max_order, beta=-2.0 * alpha)


def recip_sqrt_function(max_order: int = DEFAULT_MAX_ORDER) -> SymbolFunction:
    f = jap_power_function(0.5, max_order)
    return SymbolFunction('recip_sqrt', f.derivatives, max_order, beta=-1.0)


def rational_function(max_order: int = DEFAULT_MAX_ORDER) -> SymbolFunction:
    f = jap_power_function(1.0, max_order)
    return SymbolFunction('rational', f.derivatives, max_order, beta=-2.0)


def sin_function(freq: float = 1.0, phase: float = 0.0, max_order: int = DEFAULT_MAX_ORDER) -> SymbolFunction:
    def derivatives(x: np.ndarray, k: int) -> np.ndarray:
        return freq ** k * np.sin(freq * x + phase + k * math.pi / 2)
    return SymbolFunction('sin(%g x)' % freq, derivatives, max_order, beta=0.0)


def power_function(alpha: float, max_order: int = DEFAULT_MAX_ORDER) -> SymbolFunction:
    '''x -> x^alpha on (0, inf).'''
    def derivatives(x: np.ndarray, k: int) -> np.ndarray:
        falling = 1.0
        for i in range(k):
            falling *= alpha - i
        return falling * x ** (alpha - k)
    return SymbolFunction('power(%g)' % alpha, derivatives, max_order, beta=alpha, domain=(0.0, INF))


def log_function(max_order: int = DEFAULT_MAX_ORDER) -> SymbolFunction:
    def derivatives(x: np.ndarray, k: int) -> np.ndarray:
        if k == 0:
            return np.log(x)
        return (-1) ** (k - 1) * math.factorial(k - 1) * x ** (-float(k))
    return SymbolFunction('log', derivatives, max_order, beta=0.0, domain=(0.0, INF))


def smoothstep(order: int) -> Polynomial:
    '''Polynomial S on [0, 1] with S(0) = 0, S(1) = 1 and derivatives 1..order
    vanishing at both ends.'''
    if order < 0:
        raise ValueError('smoothstep order must be nonnegative')
    weight = Polynomial([0.0, 1.0]) ** order * Polynomial([1.0, -1.0]) ** order
    primitive = weight.integ()
    return primitive / primitive(1.0)


def cutoff_function(lo: float, hi: float, width: float = 1.0, order: int = 8) -> SymbolFunction:
    '''C^order function equal to 1 on [lo, hi] and 0 outside [lo - width, hi + width].'''
    if hi < lo or width <= 0:
        raise ValueError('cutoff needs lo <= hi and a positive width')
    step = smoothstep(order)
    steps = [step] + [step.deriv(k) for k in range(1, order + 1)]

    def derivatives(x: np.ndarray, k: int) -> np.ndarray:
        xs = np.atleast_1d(x)
        out = np.zeros(xs.shape)
        if k == 0:
            out[(xs >= lo) & (xs <= hi)] = 1.0
        poly = steps[k] if k < len(steps) else Polynomial([0.0])
        left = (xs > lo - width) & (xs < lo)
        right = (xs > hi) & (xs < hi + width)
        out[left] = poly((xs[left] - (lo - width)) / width) / width ** k
        out[right] = poly((hi + width - xs[right]) / width) * (-1.0 / width) ** k
        return out.reshape(np.shape(x))
    return SymbolFunction('cutoff[%g,%g]' % (lo, hi), derivatives, order)


FUNCTIONS: Final[dict[str, Callable[..., SymbolFunction]]] = {
    'exp': exp_function,
    'gauss': gauss_function,
    'poly': poly_function,
    'recip_sqrt': recip_sqrt_function,
    'rational': rational_function,
    'jap_power': jap_power_function,
    'sin': sin_function,
    'power': power_function,
    'log': log_function,
}


def from_spec(name: str, params: dict[str, Any] | None = None) -> SymbolFunction:
    '''Build a catalogue function from its config name and parameters.'''
    try:
        factory = FUNCTIONS[name]
    except KeyError:
        raise ValueError('unknown function %r, expected one of %s' % (name, sorted(FUNCTIONS)))
    return factory(**(params or {}))
