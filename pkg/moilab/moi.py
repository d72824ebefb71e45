"""
moilab.moi
~~~~~~~~~~

Multiple operator integrals over finite spectra, their algebraic identities,
the weighted norm bound and the heat-kernel simplex equality.

"""
import logging
import math
import string
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any, Final, Optional, Union

import numpy as np

from .exceptions import BadIndex, DimensionMismatch, OrderExceeded
from .functions import SymbolFunction, exp_function
from .report import AttributeMixin
from .sobolev import WeightOperator, op_norm
from .spectral import (
    HermitianOperator, apply_function, as_hermitian, as_matrix,
    divided_difference_rows,
)
from .utils import jbracket

log: Final = logging.getLogger(__name__)

Symbol = Union[SymbolFunction, Callable[..., Any]]
Slot = Optional[np.ndarray]

IDENTITY_KINDS: Final = ('left', 'middle', 'right', 'perturbation', 'loewner', 'commutator')

# central stencils of accuracy order 4, offsets -(len // 2) .. len // 2
STENCILS: Final = {
    1: (1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12),
    2: (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12),
    3: (1 / 8, -1.0, 13 / 8, 0.0, -13 / 8, 1.0, -1 / 8),
}

LETTERS: Final = string.ascii_letters
QUAD_CHUNK: Final = 1 << 15


def same_operator(A: HermitianOperator, B: HermitianOperator) -> bool:
    return A is B or (A.dim == B.dim and np.array_equal(A.entries, B.entries))


@dataclass(frozen=True)
class MoiProblem:
    '''T_phi^{H_0, ..., H_n}(X_1, ..., X_n).

    ``symbol`` is either a :class:`SymbolFunction` f, read as f^[n], or a
    vectorised callable phi(x_0, ..., x_n).  A ``None`` entry in ``x_ops``
    is the identity.
    '''
    symbol: Symbol
    h_ops: tuple[HermitianOperator, ...]
    x_ops: tuple[Slot, ...]
    confluence_tol: float | None = None

    def __post_init__(self) -> None:
        h_ops = tuple(as_hermitian(h) for h in self.h_ops)
        x_ops = tuple(None if x is None else as_matrix(x) for x in self.x_ops)
        if len(h_ops) != len(x_ops) + 1:
            raise DimensionMismatch('%d operators given for %d arguments, need %d'
                                    % (len(h_ops), len(x_ops), len(x_ops) + 1),
                                    raw=(len(h_ops), len(x_ops)))
        dim = h_ops[0].dim
        shapes = [h.entries.shape for h in h_ops] + [x.shape for x in x_ops if x is not None]
        if any(shape != (dim, dim) for shape in shapes):
            raise DimensionMismatch('MOI operands must all be %dx%d, got %s' % (dim, dim, shapes), raw=shapes)
        object.__setattr__(self, 'h_ops', h_ops)
        object.__setattr__(self, 'x_ops', x_ops)

    @classmethod
    def divided(cls, f: SymbolFunction, H: Any, x_ops: Sequence[Any],
                confluence_tol: float | None = None) -> 'MoiProblem':
        '''T^{H, ..., H}_{f^[n]}(X_1, ..., X_n).'''
        H = as_hermitian(H)
        return cls(f, (H,) * (len(x_ops) + 1), tuple(x_ops), confluence_tol)

    @property
    def n(self) -> int:
        return len(self.x_ops)

    @property
    def dim(self) -> int:
        return self.h_ops[0].dim

    @property
    def is_divided(self) -> bool:
        return isinstance(self.symbol, SymbolFunction)

    def __repr__(self) -> str:
        name = self.symbol.name if isinstance(self.symbol, SymbolFunction) else 'phi'
        return '%s (%s, n=%d, dim=%d)' % (self.__class__.__name__, name, self.n, self.dim)


class _Layout:
    '''Slots grouped into runs joined by identity arguments between equal
    operators.  Within a run all eigen-indices coincide.'''

    def __init__(self, p: MoiProblem) -> None:
        self.slot_group = [0]
        self.group_ops = [p.h_ops[0]]
        self.transfers: list[np.ndarray] = []
        for j, X in enumerate(p.x_ops, start=1):
            if X is None and same_operator(p.h_ops[j - 1], p.h_ops[j]):
                self.slot_group.append(self.slot_group[-1])
                continue
            self.slot_group.append(len(self.group_ops))
            left = p.h_ops[j - 1].spectral.vectors
            right = p.h_ops[j].spectral.vectors
            middle = left.conj().T @ right if X is None else left.conj().T @ X @ right
            self.group_ops.append(p.h_ops[j])
            self.transfers.append(middle)

    @property
    def groups(self) -> int:
        return len(self.group_ops)


def _symbol_tensor(p: MoiProblem, nodes: Sequence[np.ndarray], slot_group: Sequence[int]) -> np.ndarray:
    '''phi over the product of the group eigen-indices.'''
    count = max(slot_group) + 1
    shape = tuple(nodes[g].size for g in range(count))
    index = np.meshgrid(*[np.arange(size) for size in shape], indexing='ij')
    columns = [nodes[g][index[g]] for g in slot_group]
    if isinstance(p.symbol, SymbolFunction):
        rows = np.stack([c.ravel() for c in columns], axis=1)
        return divided_difference_rows(p.symbol, rows, p.confluence_tol).reshape(shape)
    return np.broadcast_to(np.asarray(p.symbol(*columns), dtype=complex), shape)


def _check_order(p: MoiProblem) -> None:
    if isinstance(p.symbol, SymbolFunction) and p.n > p.symbol.max_order:
        raise OrderExceeded('MOI of order %d exceeds %s max order %d'
                            % (p.n, p.symbol.name, p.symbol.max_order), raw=p.n)


def moi_evaluate(p: MoiProblem) -> np.ndarray:
    '''sum phi(lambda^0_{i_0}, ..., lambda^n_{i_n}) P^0_{i_0} X_1 P^1_{i_1} ... X_n P^n_{i_n}.

    Evaluated in the eigenbases of the H_j: the symbol tensor is contracted
    against the transformed arguments U_{j-1}* X_j U_j.
    '''
    _check_order(p)
    layout = _Layout(p)
    nodes = [h.spectral.nodes for h in layout.group_ops]
    phi = _symbol_tensor(p, nodes, layout.slot_group)
    if layout.groups == 1:
        core = np.diag(phi)
    else:
        letters = LETTERS[:layout.groups]
        operands = [letters] + [letters[g - 1] + letters[g] for g in range(1, layout.groups)]
        spec = '%s->%s%s' % (','.join(operands), letters[0], letters[-1])
        core = np.einsum(spec, phi, *layout.transfers, optimize='greedy')
    first = layout.group_ops[0].spectral.vectors
    last = layout.group_ops[-1].spectral.vectors
    log.debug('%r contracted over %d groups', p, layout.groups)
    return first @ core @ last.conj().T


def moi_trace(p: MoiProblem) -> complex:
    '''Tr T_phi^{H_0, ..., H_n}(X_1, ..., X_n).

    When H_n equals H_0 the last eigen-index is tied to the first, so the
    symbol tensor loses a dimension.
    '''
    _check_order(p)
    layout = _Layout(p)
    if layout.groups == 1 or not same_operator(layout.group_ops[0], layout.group_ops[-1]):
        return complex(np.trace(moi_evaluate(p)))
    last = layout.groups - 1
    slot_group = [0 if g == last else g for g in layout.slot_group]
    nodes = [h.spectral.nodes for h in layout.group_ops[:last]]
    phi = _symbol_tensor(p, nodes, slot_group)
    letters = LETTERS[:last] + LETTERS[0]
    operands = [letters[:last]] + [letters[g - 1] + letters[g] for g in range(1, layout.groups)]
    return complex(np.einsum('%s->' % ','.join(operands), phi, *layout.transfers, optimize='greedy'))


def _filled(x_ops: Sequence[Slot], dim: int) -> list[np.ndarray]:
    return [np.eye(dim, dtype=complex) if x is None else as_matrix(x) for x in x_ops]


def identity_sides(kind: str, f: SymbolFunction, h_ops: Sequence[Any], x_ops: Sequence[Slot],
                   a: Any = None, pair: tuple[Any, Any] | None = None,
                   j: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    '''Both sides of one of the MOI identities.

    ``left``, ``right`` and ``middle`` (between X_j and X_{j+1}) move ``a``
    across an argument; ``perturbation`` swaps H_j between ``pair`` = (A, B);
    ``loewner`` compares f(H + a) - f(H) with T^{H+a, H}(a); ``commutator``
    compares [f(H), a] with T^{H, H}([H, a]).
    '''
    if kind not in IDENTITY_KINDS:
        raise ValueError('unknown identity %r, expected one of %s' % (kind, IDENTITY_KINDS))
    hs = [as_hermitian(h) for h in h_ops]
    n = len(x_ops)
    dim = hs[0].dim
    xs = _filled(x_ops, dim)

    def T(ops: Sequence[HermitianOperator], args: Sequence[np.ndarray]) -> np.ndarray:
        return moi_evaluate(MoiProblem(f, tuple(ops), tuple(args)))

    def bracket(H: HermitianOperator, b: np.ndarray) -> np.ndarray:
        return H.entries @ b - b @ H.entries

    if kind in ('loewner', 'commutator'):
        H, b = hs[0], as_matrix(a)
        if kind == 'loewner':
            lhs = apply_function(f, as_hermitian(H.entries + b)) - apply_function(f, H)
            return lhs, T([as_hermitian(H.entries + b), H], [b])
        fH = apply_function(f, H)
        return fH @ b - b @ fH, T([H, H], [bracket(H, b)])
    if kind == 'perturbation':
        if j is None or not 0 <= j <= n:
            raise BadIndex('perturbation slot %r outside 0..%d' % (j, n), raw=j)
        if pair is None:
            raise ValueError('perturbation identity needs the pair (A, B)')
        A, B = as_hermitian(pair[0]), as_hermitian(pair[1])
        lhs = T(hs[:j] + [A] + hs[j + 1:], xs) - T(hs[:j] + [B] + hs[j + 1:], xs)
        return lhs, T(hs[:j] + [A, B] + hs[j + 1:], xs[:j] + [A.entries - B.entries] + xs[j:])
    b = as_matrix(a)
    if kind == 'left':
        if n < 1:
            raise BadIndex('left identity needs at least one argument', raw=n)
        lhs = T(hs, [b @ xs[0]] + xs[1:]) - b @ T(hs, xs)
        return lhs, T([hs[0]] + hs, [bracket(hs[0], b)] + xs)
    if kind == 'right':
        if n < 1:
            raise BadIndex('right identity needs at least one argument', raw=n)
        lhs = T(hs, xs) @ b - T(hs, xs[:-1] + [xs[-1] @ b])
        return lhs, T(hs + [hs[-1]], xs + [bracket(hs[-1], b)])
    if j is None or not 1 <= j <= n - 1:
        raise BadIndex('middle slot %r outside 1..%d' % (j, n - 1), raw=j)
    lhs = (T(hs, xs[:j] + [b @ xs[j]] + xs[j + 1:])
           - T(hs, xs[:j - 1] + [xs[j - 1] @ b] + xs[j:]))
    return lhs, T(hs[:j + 1] + hs[j:], xs[:j] + [bracket(hs[j], b)] + xs[j:])


def identity_residual(kind: str, f: SymbolFunction, h_ops: Sequence[Any], x_ops: Sequence[Slot],
                      a: Any = None, pair: tuple[Any, Any] | None = None, j: int | None = None) -> float:
    '''||LHS - RHS||_2 of :func:`identity_sides`.'''
    lhs, rhs = identity_sides(kind, f, h_ops, x_ops, a=a, pair=pair, j=j)
    return float(np.linalg.norm(lhs - rhs, 2))


def derivative_identity_residual(f: SymbolFunction, H: Any, V: Any, n: int, h: float) -> float:
    '''|| FD_n(t -> f(H + tV); h) / n! - T^H_{f^[n]}(V, ..., V) ||_2

    FD_n is the central stencil of accuracy order 4 at t = 0.
    '''
    if n not in STENCILS:
        raise ValueError('derivative stencils exist for n in %s, got %d' % (sorted(STENCILS), n))
    if f.max_order < n + 2:
        raise OrderExceeded('%s needs derivatives up to %d for the order %d check'
                            % (f.name, n + 2, n), raw=n)
    if h <= 0:
        raise ValueError('step must be positive')
    H, V = as_hermitian(H), as_hermitian(V)
    if H.dim != V.dim:
        raise DimensionMismatch('H is %dx%d but V is %dx%d' % (H.dim, H.dim, V.dim, V.dim))
    weights = STENCILS[n]
    half = len(weights) // 2
    fd = np.zeros((H.dim, H.dim), dtype=complex)
    for k, w in zip(range(-half, half + 1), weights):
        if w:
            fd += w * apply_function(f, HermitianOperator(H.entries + k * h * V.entries))
    fd /= h ** n * math.factorial(n)
    exact = moi_evaluate(MoiProblem.divided(f, H, [V.entries] * n))
    return float(np.linalg.norm(fd - exact, 2))


class NormBoundReport(AttributeMixin):
    attrs = ['lhs', 'rhs_factor', 'fitted_C', 'total_order', 'levels', 'levels_source']

    def __init__(self, lhs: float, rhs_factor: float, total_order: float,
                 levels: list[float], levels_source: str) -> None:
        self.lhs = lhs
        self.rhs_factor = rhs_factor
        self.fitted_C = lhs / rhs_factor if rhs_factor > 0 else math.inf
        self.total_order = total_order
        self.levels = levels
        self.levels_source = levels_source

    def __repr__(self) -> str:
        return '%s (C=%.4g)' % (self.__class__.__name__, self.fitted_C)


def telescoping_levels(s: float, k: Sequence[float], r: Sequence[float]) -> list[float]:
    '''s_j = s + sum_{i<j} k_i + sum_{1<=i<j} r_i for j = 1..n.'''
    return [s + sum(k[:j]) + sum(r[:j - 1]) for j in range(1, len(r) + 1)]


def joint_weighted_sup(p: MoiProblem, beta: Sequence[float]) -> float:
    '''max over the product of spectra of |phi| prod_j <lambda_j>^(-beta_j).'''
    nodes = [h.spectral.eigenvalues for h in p.h_ops]
    phi = _symbol_tensor(p, nodes, list(range(p.n + 1)))
    weight = np.ones(phi.shape)
    for j, lam in enumerate(nodes):
        shape = [1] * len(nodes)
        shape[j] = lam.size
        weight = weight * (jbracket(lam) ** (-float(beta[j]))).reshape(shape)
    return float(np.max(np.abs(phi) * weight))


def moi_norm_bound_check(p: MoiProblem, W: WeightOperator, s: float, beta: Sequence[float],
                         r: Sequence[float], h: Sequence[float] | None = None,
                         levels: Sequence[float] | None = None) -> NormBoundReport:
    '''Compare ||T||_{s + total -> s} with prod_j ||X_j||_{s_j + r_j -> s_j}
    times the joint weighted sup of the symbol.

    ``beta`` has one weight per operator slot, ``h`` the orders of the H_j
    (default 1) and ``r`` one order per argument.  Unless ``levels`` are
    given the s_j are the telescoping ones.
    '''
    _check_order(p)
    n = p.n
    if len(beta) != n + 1 or len(r) != n:
        raise DimensionMismatch('need %d weights and %d argument orders, got %d and %d'
                                % (n + 1, n, len(beta), len(r)), raw=(len(beta), len(r)))
    orders = [1.0] * (n + 1) if h is None else [float(v) for v in h]
    k = [float(b) * o for b, o in zip(beta, orders)]
    total = float(sum(r) + sum(k))
    if levels is None:
        chosen, source = telescoping_levels(s, k, r), 'telescoping'
    else:
        if len(levels) != n:
            raise DimensionMismatch('need %d intermediate levels, got %d' % (n, len(levels)), raw=levels)
        chosen, source = [float(v) for v in levels], 'given'
    lhs = op_norm(moi_evaluate(p), s, total, W)
    xs = _filled(p.x_ops, p.dim)
    factor = joint_weighted_sup(p, beta)
    for X, level, order in zip(xs, chosen, r):
        factor *= op_norm(X, level, order, W)
    report = NormBoundReport(lhs, factor, total, chosen, source)
    log.debug('norm bound %r with %s levels %s', report, source, chosen)
    return report


def simplex_rule(n: int, points: int, rule: str = 'midpoint') -> tuple[np.ndarray, np.ndarray]:
    '''Nodes (Q, n+1) and weights (Q,) on the standard n-simplex, total
    weight 1/n!, from a tensor rule on the cube collapsed onto the simplex.'''
    if n == 0:
        return np.ones((1, 1)), np.ones(1)
    if rule == 'midpoint':
        u1 = (np.arange(points) + 0.5) / points
        w1 = np.full(points, 1.0 / points)
    elif rule == 'gauss':
        x, w = np.polynomial.legendre.leggauss(points)
        u1, w1 = (x + 1.0) / 2.0, w / 2.0
    else:
        raise ValueError('unknown simplex rule %r' % rule)
    grids = np.meshgrid(*[u1] * n, indexing='ij')
    u = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.ones(u.shape[0])
    for g in np.meshgrid(*[w1] * n, indexing='ij'):
        weights = weights * g.ravel()
    t = np.empty((u.shape[0], n + 1))
    remaining = np.ones(u.shape[0])
    for i in range(n):
        t[:, i] = remaining * u[:, i]
        remaining = remaining * (1.0 - u[:, i])
        weights = weights * (1.0 - u[:, i]) ** (n - 1 - i)
    t[:, n] = remaining
    return t, weights


def jlo_equality_residual(eta: Any, a_list: Sequence[Any], D: Any, n: int, quad_pts: int,
                          rule: str = 'midpoint') -> float:
    '''| simplex integral of Tr(eta a_0 e^{-t_0 D^2} [D,a_1] ... [D,a_n] e^{-t_n D^2})
    - (-1)^n Tr(eta a_0 T^{D^2}_{g^[n]}([D,a_1], ..., [D,a_n])) |  with g(x) = e^{-x}.

    The sign comes from g^(n) = (-1)^n g in the simplex form of g^[n].
    '''
    if len(a_list) != n + 1:
        raise DimensionMismatch('need a_0..a_%d, got %d operators' % (n, len(a_list)), raw=len(a_list))
    if quad_pts < 10:
        raise ValueError('at least 10 quadrature points per simplex dimension')
    D = as_hermitian(D)
    e = as_matrix(eta)
    mats = [as_matrix(a) for a in a_list]
    if any(m.shape != (D.dim, D.dim) for m in [e] + mats):
        raise DimensionMismatch('eta and the a_i must be %dx%d' % (D.dim, D.dim))
    U = D.spectral.vectors
    lam = D.spectral.nodes ** 2
    brackets = [D.entries @ a - a @ D.entries for a in mats[1:]]
    closing = U.conj().T @ e @ mats[0] @ U
    transfers = [U.conj().T @ b @ U for b in brackets]
    t, w = simplex_rule(n, quad_pts, rule)
    letters = LETTERS[:n + 1]
    phi = np.zeros((lam.size,) * (n + 1), dtype=complex)
    kernel = ','.join(['q'] + ['q' + c for c in letters]) + '->' + letters
    for start in range(0, w.size, QUAD_CHUNK):
        part = slice(start, start + QUAD_CHUNK)
        factors = [np.exp(-np.outer(t[part, j], lam)) for j in range(n + 1)]
        phi += np.einsum(kernel, w[part], *factors, optimize='greedy')
    operands = [letters, letters[-1] + letters[0]] + [letters[i] + letters[i + 1] for i in range(n)]
    lhs = complex(np.einsum('%s->' % ','.join(operands), phi, closing, *transfers, optimize='greedy'))
    square = HermitianOperator(D.entries @ D.entries)
    T = moi_evaluate(MoiProblem.divided(exp_function(-1.0), square, brackets))
    rhs = (-1) ** n * complex(np.trace(e @ mats[0] @ T))
    log.debug('simplex equality n=%d (%s, %d points): %.3e vs %.3e', n, rule, quad_pts, abs(lhs), abs(rhs))
    return abs(lhs - rhs)
