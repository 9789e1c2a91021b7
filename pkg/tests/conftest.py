import numpy as np
import pytest

from gpmix import GmmParams, OmegaTensor, get_generator, omega_rank_one_sum

EXAMPLE_WEIGHTS = np.array([0.4, 0.6])
EXAMPLE_VECTORS = np.array([
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [1.0, -1.0, 2.0, -1.0, 2.0, 3.0],
])


def exact_instance(d: int, r: int, seed: int) -> tuple[OmegaTensor, np.ndarray]:
    factors = get_generator(seed).standard_normal((r, d))
    return omega_rank_one_sum(np.ones(r), factors), factors


def random_params(d: int, r: int, seed: int) -> GmmParams:
    generator = get_generator(seed)
    weights = generator.uniform(0.5, 1.5, r)
    return GmmParams(
        weights=weights / weights.sum(),
        means=generator.standard_normal((r, d)),
        diag_covs=generator.standard_normal((r, d)) ** 2,
    )


@pytest.fixture
def example_tensor() -> OmegaTensor:
    return omega_rank_one_sum(EXAMPLE_WEIGHTS, EXAMPLE_VECTORS)


@pytest.fixture
def example_factors() -> np.ndarray:
    return np.cbrt(EXAMPLE_WEIGHTS)[:, None] * EXAMPLE_VECTORS


@pytest.fixture
def rank_one_vector() -> np.ndarray:
    return np.arange(1.0, 7.0)
