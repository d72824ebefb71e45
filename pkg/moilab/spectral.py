"""
moilab.spectral
~~~~~~~~~~~~~~~

Dense Hermitian operators, their clustered spectral decompositions, the
functional calculus, and divided differences.

"""
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Final

import numpy as np
import scipy.linalg

from .exceptions import (
    DimensionMismatch, DomainViolation, EigFailure, NotHermitian, OrderExceeded,
)
from .functions import SymbolFunction

log: Final = logging.getLogger(__name__)

HERMITIAN_TOL: Final = 1e-12
CLUSTER_SCALE: Final = 1e-10
EPS: Final = float(np.finfo(float).eps)
TAYLOR_SPAN_CAP: Final = 5e-2
TAYLOR_TAIL: Final = 1e3 * EPS


@dataclass(frozen=True)
class SpectralDecomposition:
    '''Distinct eigenvalues (ascending) with their spectral projections.

    ``vectors`` holds an orthonormal eigenbasis whose column ``i`` belongs to
    cluster ``labels[i]``; ``nodes`` repeats the clustered eigenvalue per
    column.  The projections are built from those columns.
    '''
    eigenvalues: np.ndarray
    projections: tuple[np.ndarray, ...]
    cluster_tol: float
    vectors: np.ndarray
    labels: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return self.eigenvalues[self.labels]

    @property
    def multiplicities(self) -> list[int]:
        return [int(np.count_nonzero(self.labels == i)) for i in range(len(self.eigenvalues))]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.nodes) @ self.vectors.conj().T

    def to_json(self) -> dict:
        return {'eigenvalues': [float(x) for x in self.eigenvalues],
                'projections': [matrix_to_json(p) for p in self.projections]}


class HermitianOperator:
    '''Dense self-adjoint matrix with a lazily computed, then frozen,
    spectral decomposition.'''
    entries: np.ndarray
    hermitian_tol: float

    def __init__(self, entries: Any, hermitian_tol: float = HERMITIAN_TOL) -> None:
        matrix = np.array(entries, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
            raise DimensionMismatch('Hermitian operator needs a nonempty square matrix, got shape %s'
                                    % (matrix.shape,), raw=matrix.shape)
        scale = np.linalg.norm(matrix)
        skew = np.linalg.norm(matrix - matrix.conj().T)
        if skew > hermitian_tol * scale:
            raise NotHermitian('||M - M*||_F = %.3e exceeds %.1e * ||M||_F' % (skew, hermitian_tol),
                               raw=skew)
        matrix.setflags(write=False)
        self.entries = matrix
        self.hermitian_tol = hermitian_tol

    @classmethod
    def diagonal(cls, values: Sequence[float] | np.ndarray) -> 'HermitianOperator':
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def from_json(cls, obj: dict) -> 'HermitianOperator':
        return cls(matrix_from_json(obj))

    def to_json(self) -> dict:
        return matrix_to_json(self.entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def spectral(self) -> SpectralDecomposition:
        return eig(self)

    @cached_property
    def norm(self) -> float:
        return float(np.max(np.abs(self.spectral.eigenvalues)))

    def __array__(self, dtype: Any = None, copy: Any = None) -> np.ndarray:
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self) -> str:
        return '%s (dim=%d)' % (self.__class__.__name__, self.dim)


def as_matrix(op: Any) -> np.ndarray:
    if isinstance(op, HermitianOperator):
        return op.entries
    return np.asarray(op, dtype=complex)


def as_hermitian(op: Any) -> HermitianOperator:
    return op if isinstance(op, HermitianOperator) else HermitianOperator(op)


def eig(H: HermitianOperator, cluster_tol: float | None = None) -> SpectralDecomposition:
    '''Clustered spectral decomposition of H.

    Eigenvalues closer than ``cluster_tol`` (default 1e-10 (1 + ||H||_2)) are
    merged and represented by their mean.
    '''
    try:
        values, vectors = scipy.linalg.eigh(H.entries)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise EigFailure('eigensolver failed: %s' % e, raw=H)
    if cluster_tol is None:
        cluster_tol = CLUSTER_SCALE * (1.0 + float(np.max(np.abs(values))))
    labels = np.concatenate([[0], np.cumsum(np.diff(values) > cluster_tol)]).astype(int)
    count = int(labels[-1]) + 1
    eigenvalues = np.array([values[labels == i].mean() for i in range(count)])
    projections = []
    for i in range(count):
        block = vectors[:, labels == i]
        proj = block @ block.conj().T
        proj.setflags(write=False)
        projections.append(proj)
    if count < len(values):
        log.debug('merged %d eigenvalues into %d clusters (tol %.1e)', len(values), count, cluster_tol)
    for arr in (eigenvalues, vectors, labels):
        arr.setflags(write=False)
    return SpectralDecomposition(eigenvalues, tuple(projections), cluster_tol, vectors, labels)


def check_domain(f: SymbolFunction, points: Any) -> None:
    if not f.contains(points):
        lo, hi = f.domain
        pts = np.asarray(points, dtype=float).ravel()
        bad = pts[(pts <= lo) | (pts >= hi)]
        raise DomainViolation('%s is defined on (%g, %g); spectral point %g lies outside'
                              % (f.name, lo, hi, bad[0]), raw=bad)


def apply_function(f: SymbolFunction, H: HermitianOperator, k: int = 0) -> np.ndarray:
    '''Return sum_i f^(k)(lambda_i) P_i.'''
    spec = H.spectral
    check_domain(f, spec.eigenvalues)
    values = f.evaluate(spec.nodes, k).astype(complex)
    return (spec.vectors * values) @ spec.vectors.conj().T


def _check_nodes(f: SymbolFunction, nodes: Any) -> np.ndarray:
    x = np.asarray(nodes, dtype=float).ravel()
    if x.size == 0:
        raise ValueError('divided differences need at least one node')
    if x.size - 1 > f.max_order:
        raise OrderExceeded('divided difference of order %d exceeds %s max order %d'
                            % (x.size - 1, f.name, f.max_order), raw=x.size - 1)
    check_domain(f, x)
    return x


def confluence_span(f: SymbolFunction) -> float:
    '''Relative node span below which f^[n] comes from the Taylor series at
    the node mean.

    A series cut at f's max order K loses span^(K+1); the quotient table
    loses eps / span^n.  The two meet at eps^(1/(K+1)), capped at
    ``TAYLOR_SPAN_CAP``.
    '''
    return min(TAYLOR_SPAN_CAP, EPS ** (1.0 / (f.max_order + 1)))


def _taylor_windows_mask(f: SymbolFunction, lo: np.ndarray, hi: np.ndarray, tol: float) -> np.ndarray:
    span = hi - lo
    scale = np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    a, b = f.domain
    center = 0.5 * (lo + hi)
    # the series must converge well inside the domain
    reach = np.minimum(center - a, b - center) / 4.0
    return (span <= tol * scale) & (span <= reach)


def _taylor_windows(f: SymbolFunction, windows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    '''f^[m] of every row of an (R, m+1) array as
    sum_{k>=m} f^(k)(c) / k! h_{k-m}(x - c), c the row mean and h_j the
    complete homogeneous symmetric polynomials.

    Also returns the size of the last two terms and the sum of all term
    sizes.'''
    m = windows.shape[1] - 1
    K = f.max_order
    center = windows.mean(axis=1)
    d = windows - center[:, None]
    h = d[:, :1] ** np.arange(K - m + 1)[None, :]
    for i in range(1, m + 1):
        for j in range(1, K - m + 1):
            h[:, j] = h[:, j] + d[:, i] * h[:, j - 1]
    total = np.zeros(windows.shape[0], dtype=complex)
    magnitude = np.zeros(windows.shape[0])
    tail = np.zeros(windows.shape[0])
    with np.errstate(over='ignore', invalid='ignore'):
        for k in range(K, m - 1, -1):
            hk = h[:, k - m]
            term = np.where(hk != 0, f.evaluate(center, k) / math.factorial(k) * hk, 0.0)
            total += term
            magnitude += np.abs(term)
            if k >= K - 1:
                tail += np.abs(term)
    return total, tail, magnitude


def _quotient_table(f: SymbolFunction, xs: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    '''Row-wise recursion on sorted nodes with a running error estimate.

    A window with span below ``tol`` takes its Taylor value when that
    estimate beats the quotient's; coincident nodes always do.  Also returns
    which rows took the Taylor value for the full window.
    '''
    table = f(xs).astype(complex)
    err = EPS * np.abs(table)
    taylor = np.zeros(xs.shape[0], dtype=bool)
    for level in range(1, xs.shape[1]):
        lo, hi = xs[:, :-level], xs[:, level:]
        flat = hi == lo
        span = np.where(flat, 1.0, hi - lo)
        quotient = (table[:, 1:] - table[:, :-1]) / span
        qerr = np.where(flat, math.inf, (err[:, 1:] + err[:, :-1]) / span) + EPS * np.abs(quotient)
        chosen = np.zeros(flat.shape, dtype=bool)
        near = _taylor_windows_mask(f, lo, hi, tol)
        if np.any(near):
            rows, starts = np.nonzero(near)
            windows = xs[rows[:, None], starts[:, None] + np.arange(level + 1)[None, :]]
            value, tail, magnitude = _taylor_windows(f, windows)
            terr = tail + EPS * magnitude
            better = terr <= qerr[rows, starts]
            rows, starts = rows[better], starts[better]
            quotient[rows, starts] = value[better]
            qerr[rows, starts] = terr[better]
            chosen[rows, starts] = True
        table, err = quotient, qerr
        taylor = chosen[:, 0]
    return table[:, 0], taylor


def divided_difference(f: SymbolFunction, nodes: Any, confluence_tol: float | None = None) -> complex:
    '''f^[n](nodes) by the difference-quotient recursion on sorted nodes.

    Windows of the recursion whose span is below ``confluence_tol`` relative
    to max(1, max |node|) are summed from their Taylor series when that is
    the more accurate route; when the full span is, the value comes from
    :func:`divided_difference_opitz`.  The tolerance defaults to
    :func:`confluence_span`.
    '''
    x = np.sort(_check_nodes(f, nodes))
    tol = confluence_span(f) if confluence_tol is None else confluence_tol
    value, taylor = _quotient_table(f, x[None, :], tol)
    if taylor[0]:
        log.debug('confluent nodes %s routed to the triangular evaluation', x)
        return divided_difference_opitz(f, x, tol)
    return complex(value[0])


def divided_difference_opitz(f: SymbolFunction, nodes: Any, block_tol: float | None = None) -> complex:
    '''Entry (0, n) of f applied to the upper bidiagonal matrix with the nodes
    on the diagonal and ones above it.'''
    x = np.sort(_check_nodes(f, nodes))
    if x.size == 1:
        return complex(f(x)[0])
    return complex(bidiagonal_function(f, x, block_tol)[0, -1])


def bidiagonal_function(f: SymbolFunction, x: np.ndarray, block_tol: float | None = None) -> np.ndarray:
    '''Block Schur-Parlett evaluation of f(J), J = diag(x) + superdiagonal ones.

    A node joins the current diagonal block when its gap is below
    ``block_tol`` (relative, default :func:`confluence_span`) and the Taylor
    series of the enlarged block still converges inside f's domain, or when
    the recursion over the block's nodes takes the Taylor route anyway.
    Blocks are evaluated by that series around their mean using every
    derivative f declares; off-diagonal blocks solve the Parlett-Sylvester
    recurrence.  Equal nodes never straddle two blocks.
    '''
    size = x.size
    tol = confluence_span(f) if block_tol is None else block_tol
    T = np.diag(x.astype(complex)) + np.diag(np.ones(size - 1, dtype=complex), 1)
    starts = [0]
    for i in range(1, size):
        if x[i] == x[i - 1]:
            continue
        block = x[None, starts[-1]:i + 1]
        if _quotient_table(f, block, tol)[1][0]:
            continue
        close = x[i] - x[i - 1] <= tol * max(1.0, abs(x[i - 1]), abs(x[i]))
        if close and _taylor_windows_mask(f, block[:, :1], block[:, -1:], math.inf)[0]:
            _, tail, magnitude = _taylor_windows(f, block)
            if tail[0] <= TAYLOR_TAIL * magnitude[0]:
                continue
        starts.append(i)
    bounds = list(zip(starts, starts[1:] + [size]))
    F = np.zeros((size, size), dtype=complex)
    for a, b in bounds:
        F[a:b, a:b] = _taylor_block(f, T[a:b, a:b])
    for gap in range(1, len(bounds)):
        for i in range(len(bounds) - gap):
            j = i + gap
            (ia, ib), (ja, jb) = bounds[i], bounds[j]
            rhs = F[ia:ib, ia:ib] @ T[ia:ib, ja:jb] - T[ia:ib, ja:jb] @ F[ja:jb, ja:jb]
            for k in range(i + 1, j):
                ka, kb = bounds[k]
                rhs += F[ia:ib, ka:kb] @ T[ka:kb, ja:jb] - T[ia:ib, ka:kb] @ F[ka:kb, ja:jb]
            F[ia:ib, ja:jb] = scipy.linalg.solve_sylvester(T[ia:ib, ia:ib], -T[ja:jb, ja:jb], rhs)
    return F


def _taylor_block(f: SymbolFunction, block: np.ndarray) -> np.ndarray:
    size = block.shape[0]
    center = float(np.mean(np.diag(block).real))
    shifted = block - center * np.eye(size)
    term = np.eye(size, dtype=complex)
    total = np.zeros_like(term)
    for k in range(f.max_order + 1):
        total += complex(f.evaluate(center, k)) / math.factorial(k) * term
        term = term @ shifted
        if not np.any(term):
            break
    return total


def divided_difference_rows(f: SymbolFunction, rows: np.ndarray,
                            confluence_tol: float | None = None) -> np.ndarray:
    '''f^[n] of every row of an (R, n+1) node array.

    Rows are sorted and pushed through the recursion together; windows whose
    span is below ``confluence_tol`` (default :func:`confluence_span`) take
    the Taylor value at their mean, which is f^(k)/k! on coincident nodes.
    '''
    xs = np.sort(np.asarray(rows, dtype=float), axis=1)
    n = xs.shape[1] - 1
    if n > f.max_order:
        raise OrderExceeded('divided difference of order %d exceeds %s max order %d'
                            % (n, f.name, f.max_order), raw=n)
    check_domain(f, xs)
    tol = confluence_span(f) if confluence_tol is None else confluence_tol
    return _quotient_table(f, xs, tol)[0]


def divided_difference_grid(f: SymbolFunction, columns: Sequence[np.ndarray],
                            confluence_tol: float | None = None) -> np.ndarray:
    '''Tensor of f^[n](x0[i0], ..., xn[in]) over the product of node columns.'''
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    grids = np.meshgrid(*cols, indexing='ij')
    rows = np.stack([g.ravel() for g in grids], axis=1)
    return divided_difference_rows(f, rows, confluence_tol).reshape(tuple(c.size for c in cols))


def matrix_to_json(matrix: Any) -> dict:
    m = as_matrix(matrix)
    return {'dim': int(m.shape[0]), 're': m.real.tolist(), 'im': m.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    re = np.asarray(obj['re'], dtype=float)
    im = np.asarray(obj.get('im', np.zeros_like(re)), dtype=float)
    dim = int(obj.get('dim', re.shape[0]))
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise DimensionMismatch('matrix encoding declares dim %d but carries shapes %s and %s'
                                % (dim, re.shape, im.shape), raw=obj)
    return re + 1j * im
