# -*- coding: utf-8 -*-
"""测试公共夹具"""

import numpy as np
import pytest

from spectral_core import Grid, RealField
from operators import ModelParams


@pytest.fixture
def grid():
    return Grid(64, 40.0)


@pytest.fixture
def fine_grid():
    return Grid(128, 40.0)


@pytest.fixture
def params():
    return ModelParams(l=0.5, p=1)


@pytest.fixture
def gaussian(grid):
    return RealField(grid, np.exp(-(grid.x / 2.0) ** 2))


@pytest.fixture
def periodic_grid():
    """L = 2π，波数为整数"""
    return Grid(32, 2.0 * np.pi)
