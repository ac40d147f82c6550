import math

import pytest

from nvnmr import DecoherenceParams, ReadoutModel, SpinParameters


@pytest.fixture
def params():
    return SpinParameters()


@pytest.fixture
def readout():
    return ReadoutModel()


@pytest.fixture
def no_damping():
    return DecoherenceParams(t2_star_us=math.inf, t_rabi_us=math.inf)
