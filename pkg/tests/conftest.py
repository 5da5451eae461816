"""Shared test fixtures: small hand-built spaces and kernels."""
from __future__ import annotations

import numpy as np
import pytest

from gammalink import Kernel, build_space, line, space_from_points


@pytest.fixture
def uniform_kernel() -> Kernel:
    return Kernel("uniform")


@pytest.fixture
def two_point_space():
    """The {0, 7} line with weights (3/4, 1/4)."""
    return space_from_points(np.array([[0.0], [7.0]]),
                             weights=np.array([0.75, 0.25]))


@pytest.fixture
def two_point_curve():
    """The diagonal sweep from (8, 8, 0) down to (0, 0, 1)."""
    return line(8.0, 1.0)


@pytest.fixture
def three_point_space():
    """{0, 0.5, 2} on the line, uniform weights."""
    return space_from_points(np.array([[0.0], [0.5], [2.0]]))


@pytest.fixture
def single_point_space():
    return build_space(np.zeros((1, 1)), np.array([1.0]))
