"""Shared fixtures: contexts, the standard seminorm family, seeded generators."""

import numpy as np
import pytest

from src.core.config import StepperConfig
from src.core.contexts import diagonal, general_linear, heisenberg, so3
from src.core.seminorms import SeminormFamily


@pytest.fixture
def heis():
    return heisenberg()


@pytest.fixture
def rot():
    return so3()


@pytest.fixture
def gl2():
    return general_linear(2)


@pytest.fixture
def gl3():
    return general_linear(3)


@pytest.fixture
def diag2():
    return diagonal(2)


@pytest.fixture(params=["heisenberg", "so3", "gl3"])
def ctx(request):
    return {"heisenberg": heisenberg, "so3": so3, "gl3": lambda: general_linear(3)}[request.param]()


@pytest.fixture
def fam():
    return SeminormFamily.standard()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def precise():
    return StepperConfig(method="commutator-free-4", steps=256)


@pytest.fixture
def midpoint():
    return StepperConfig(steps=64)
