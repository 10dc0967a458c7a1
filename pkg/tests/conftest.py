"""Shared fixtures: grids and semigroup engines reused across test modules.

Engine construction (especially the spectral eigendecomposition) is the
expensive part, so everything here is session-scoped and immutable by
convention: tests must not mutate fixture objects.
"""

import numpy as np
import pytest

from semilip.grids import Grid
from semilip.heat import SemigroupEngine
from semilip.potentials import PotentialDescriptor


@pytest.fixture(scope="session")
def grid513():
    return Grid(1, 8.0, 513)


@pytest.fixture(scope="session")
def mehler513(grid513):
    return SemigroupEngine("mehler", grid513)


@pytest.fixture(scope="session")
def gaussian513(grid513):
    return SemigroupEngine("gaussian", grid513)


@pytest.fixture(scope="session")
def spectral513(grid513):
    return SemigroupEngine("spectral", grid513,
                           potential=PotentialDescriptor("hermite", 1))


@pytest.fixture(scope="session")
def grid2049():
    return Grid(1, 8.0, 2049)


@pytest.fixture(scope="session")
def gaussian2049(grid2049):
    return SemigroupEngine("gaussian", grid2049)


@pytest.fixture(scope="session")
def mehler2049(grid2049):
    return SemigroupEngine("mehler", grid2049)
