import os

import numpy as np
import pytest

from models.oscillator import LevelSystem

SEED = int(os.environ.get("CF_SEED", "365"))


def make_level_system(rng, n_levels=None, energy_span=3.0, coupling_scale=1.0):
    n = int(rng.integers(5, 13)) if n_levels is None else n_levels
    energies = np.sort(rng.uniform(0.0, energy_span, n))
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return LevelSystem(energies, 0.5 * coupling_scale * (a + a.conj().T))


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def random_level_system(rng):
    def factory(**kwargs):
        return make_level_system(rng, **kwargs)

    return factory
