"""Shared fixtures: small deterministic measures reused across test modules."""

import numpy as np
import pytest

from detcurve.measure import GeneratorSpec, WeightedPointMeasure, generate


@pytest.fixture(scope="session")
def cube64():
    return generate(GeneratorSpec("cube_lebesgue", 2, 64, 0))


@pytest.fixture(scope="session")
def cube256():
    return generate(GeneratorSpec("cube_lebesgue", 2, 256, 0))


@pytest.fixture(scope="session")
def sphere80_d3():
    return generate(GeneratorSpec("sphere_uniform", 3, 80, 0))


@pytest.fixture(scope="session")
def circle240():
    return generate(GeneratorSpec("sphere_uniform", 2, 240, 1))


@pytest.fixture(scope="session")
def line64():
    return generate(GeneratorSpec("subspace_lebesgue", 2, 64, 0,
                                  params={"subspace_dim": 1}))


@pytest.fixture()
def three_atoms():
    pts = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    w = np.array([0.5, 0.25, 0.25])
    return WeightedPointMeasure(pts, w)
