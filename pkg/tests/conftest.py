import numpy as np
import pytest

from pwfed import MlpArchitecture, init_params


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_arch():
    return MlpArchitecture(input_dim=5, hidden_dims=(7, 4), num_classes=3)


@pytest.fixture
def small_params(small_arch):
    return init_params(small_arch, seed=3)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
