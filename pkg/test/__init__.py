import numpy as np
from pydantic_settings import BaseSettings, SettingsConfigDict

from moilab.utils import random_hermitian, random_matrix, spawn_rng


class TestSettings(BaseSettings):
    '''MOILAB_TEST_SEED and MOILAB_TEST_DRAWS select heavier property runs.'''
    model_config = SettingsConfigDict(env_prefix="moilab_test_")

    seed: int = 0
    draws: int = 5


def get_test_settings() -> TestSettings:
    return TestSettings()


def draws():
    settings = get_test_settings()
    return [(d, spawn_rng(settings.seed, d)) for d in range(settings.draws)]


def hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return random_hermitian(dim, rng, scale)


def matrices(count: int, dim: int, rng: np.random.Generator) -> list:
    return [random_matrix(dim, rng) for _ in range(count)]


def spectral_norm(M) -> float:
    return float(np.linalg.norm(np.asarray(M), 2))
