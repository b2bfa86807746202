import numpy as np
import pytest

from dbcfstar import channels as ch


@pytest.fixture(scope="session")
def bsc_model():
    return ch.make_broadcast_bsc(0.1, 0.2)


@pytest.fixture(scope="session")
def z_model():
    # beta1 = 0.9, beta2 = 0.6
    return ch.make_broadcast_z(0.1, 0.4)


@pytest.fixture(scope="session")
def bec_model():
    return ch.make_broadcast_bec(0.3, 0.5)


@pytest.fixture(scope="session")
def z3_model():
    return ch.make_group_additive(ch.GroupTable.cyclic(3), [0.8, 0.1, 0.1], [0.7, 0.2, 0.1])


@pytest.fixture(scope="session")
def gf3_model():
    return ch.make_multiplicative(ch.MultTable.prime_field(3), 0.1, 0.2, [0.8, 0.2], [0.9, 0.1])


def hb(x):
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(x > 0, -x * np.log(np.where(x > 0, x, 1)), 0.0)
        b = np.where(x < 1, -(1 - x) * np.log(np.where(x < 1, 1 - x, 1)), 0.0)
    return float(a + b)
