from collections.abc import Callable, Iterable
from typing import Any, TypeVar

import numpy as np
from joblib import Parallel, delayed

T = TypeVar('T')
R = TypeVar('R')


def jbracket(x: Any) -> Any:
    '''Japanese bracket <x> = (1 + |x|^2)^(1/2), elementwise.'''
    return np.sqrt(1.0 + np.abs(x) ** 2)


def spawn_rng(seed: int, draw: int = 0) -> np.random.Generator:
    '''Generator for draw number ``draw`` of a run seeded with ``seed``.

    Draws are independent of each other and of how many draws are taken, so
    a property suite can be re-run for a single failing draw.
    '''
    return np.random.default_rng([draw, seed])


def random_matrix(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    '''Complex Gaussian matrix with spectral norm of order ``scale``.'''
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * z / (2.0 * np.sqrt(dim))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    z = random_matrix(dim, rng, scale)
    return (z + z.conj().T) / 2.0


def ordered_map(func: Callable[[T], R], items: Iterable[T], n_jobs: int = 1) -> list[R]:
    '''Map ``func`` over ``items`` keeping input order.

    With ``n_jobs`` > 1 the calls run on a joblib thread pool; the result
    list is still in input order, so reductions over it do not depend on the
    number of workers.
    '''
    items = list(items)
    if n_jobs == 1 or len(items) < 2:
        return [func(item) for item in items]
    return Parallel(n_jobs=n_jobs, prefer='threads')(delayed(func)(item) for item in items)
