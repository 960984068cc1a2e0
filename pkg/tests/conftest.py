import numpy as np
import pytest

from randnn._backend import available_backends


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(available_backends()))
def backend(request):
    return available_backends()[request.param]
