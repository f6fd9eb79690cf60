import numpy as np
import pytest

import vqa_lab as v


@pytest.fixture(scope="session")
def layout42():
    return v.strongly_entangling_layout(4, 2)


@pytest.fixture(scope="session")
def sumz4():
    return v.sum_z(4)


@pytest.fixture(scope="session")
def layout21():
    return v.strongly_entangling_layout(2, 1)


@pytest.fixture(scope="session")
def sumz2():
    return v.sum_z(2)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
